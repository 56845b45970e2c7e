// pmon/experiment.hpp -- config-driven experiment harness.
//
// An ExperimentConfig mirrors the JSON config document, one block per
// subsystem; defaults reproduce the reference scenario (20 x 10 rectangle,
// 231-point unit lattice, A = 0.2, B = 6, R0 = 2, r = 4, T = 200).  Modes:
//
//   simulate             one integration, optional gradient and trace
//   optimize             projected gradient descent from the initial agents
//   csc                  comparison search over sampled candidates
//   tpbvp                heading-schedule descent from the agents' chord
//                        schedule
//   compare-lin-ellipse  normalized-cost sweep over the minor axis b
//   grad-check           per-component finite-difference gradient report
//
// run_experiment() writes the mode's CSV outputs plus summary.json and
// manifest.json (resolved config, seed, version, SHA-256 per file) into
// output.dir and returns the headline numbers.  All file contents are
// deterministic functions of the resolved config, so re-running a manifest's
// config reproduces identical hashes.
#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pmon/descent.hpp"
#include "pmon/geometry.hpp"
#include "pmon/global_search.hpp"
#include "pmon/model.hpp"
#include "pmon/simulator.hpp"
#include "pmon/tpbvp.hpp"
#include "pmon/trajectory.hpp"

namespace pmon {

enum class ExperimentMode {
  kSimulate,
  kOptimize,
  kCsc,
  kTpbvp,
  kCompare,
  kGradCheck,
};

std::string to_string(ExperimentMode mode);
// Accepts the config-file names: simulate, optimize, csc, tpbvp,
// compare-lin-ellipse, grad-check. Throws ConfigError otherwise.
ExperimentMode mode_from_name(const std::string& name);

struct MissionBlock {
  double L1 = 20.0;
  double L2 = 10.0;
  double r = 4.0;
  double B = 6.0;
  double C = 1.0;
  double T = 200.0;
  std::size_t agents = 1;
  bool lattice = true;       // unit lattice over the rectangle
  std::vector<Vec2> points;  // explicit locations when lattice is off
  std::vector<double> A{0.2};   // size 1 broadcasts to every point
  std::vector<double> R0{2.0};  // size 1 broadcasts

  // Resolves points and broadcasts A/R0; validates the result.
  MissionConfig build() const;
};

struct IntegratorBlock {
  double dt = 0.01;
  double event_tol_factor = 1e-3;
  std::uint32_t trace_stride = 0;  // cells per trace row, 0 = no trace
  bool ipa = false;                // carry gradients in simulate mode
};

// Uncertainty growth: constant A by default, or a piecewise-constant random
// process sampled per point from the environment stream of the master seed.
struct EnvironmentBlock {
  bool stochastic = false;
  csc::StochasticGrowthSpec growth;
};

struct TpbvpBlock {
  tpbvp::TpbvpSettings settings;
  double schedule_dt = 0.0;  // heading-grid spacing; 0 inherits integrator.dt
};

struct CompareBlock {
  // Minor-axis sweep; the near-linear limit b = kMinMinorAxis is prepended.
  std::vector<double> b_values{0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0};
};

struct GradCheckBlock {
  double step = 1e-4;     // central-difference half-step
  double rel_tol = 1e-2;  // component passes on either tolerance
  double abs_tol = 1e-4;
};

struct OutputBlock {
  std::string dir = "out";
  bool write_trace = true;   // emit trace/schedule CSVs when available
  bool write_events = false; // emit events.csv in simulate mode
};

inline csc::CscSettings default_csc_settings() {
  csc::CscSettings s;
  s.fixed_shape = EllipseParams{10.0, 5.0, 5.0, 2.0,
                                std::numbers::pi_v<double> / 4.0, 0.0};
  return s;
}

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::kSimulate;
  std::uint64_t seed = 1;
  MissionBlock mission;
  // Initial agents: an explicit list, "sample" (drawn from the sampler
  // stream), or empty for the default layout (the csc shape, centers spread
  // evenly across the rectangle).
  bool sample_agents = false;
  std::vector<EllipseParams> agents;
  IntegratorBlock integrator;
  EnvironmentBlock environment;
  DescentSettings optimizer;
  csc::CscSettings csc = default_csc_settings();
  std::optional<csc::CenterBox> csc_box;  // candidate centers; default = all
  TpbvpBlock tpbvp;
  CompareBlock compare;
  GradCheckBlock gradcheck;
  OutputBlock output;
};

// Parses a JSON config document. Malformed JSON or an override without
// key=value shape raises ParseError; unknown keys, wrong types, and invalid
// values raise ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Applies one dotted override, e.g. "mission.T=100" or "agents.0.X=5".
// The value is parsed as JSON when possible and as a bare string otherwise.
void apply_override(ExperimentConfig& config, const std::string& dotted);

// Resolved serialization: parse_config(serialize_config(c)) equals c.
std::string serialize_config(const ExperimentConfig& config);

struct RunResult {
  double J = 0.0;                   // headline cost of the mode
  std::vector<std::string> lines;   // human-readable report lines
  std::vector<std::string> outputs; // files written, relative to output.dir
};

// Executes the configured mode; writes outputs, summary.json, manifest.json.
RunResult run_experiment(const ExperimentConfig& config);

}  // namespace pmon
