// pmon/global_search.hpp -- continuous stochastic comparison over trajectory
// parameters, layered on the projected descent refiner.
//
// Trial k draws a uniform candidate, optionally refines incumbent and
// candidate by descent, and replaces the incumbent only when the candidate
// wins the comparison test: a single cost comparison in deterministic mode
// (ties keep the incumbent), or all L_k paired comparisons of estimated
// costs in stochastic mode, with L_1 = 1 and L_k = ceil(10 ln k) for k >= 2.
// With common random numbers, both sides of a pair share one environment
// realization, so acceptance realizes {P[J^(cand) < J^(inc)]}^{L_k}.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "pmon/descent.hpp"
#include "pmon/model.hpp"
#include "pmon/simulator.hpp"
#include "pmon/trajectory.hpp"

namespace pmon {
namespace csc {

// Piecewise-constant per-point growth rates: each point independently holds
// a value drawn uniform(value_low, value_high) for an exponentially
// distributed duration (given mean), resampled at every switch.
struct StochasticGrowthSpec {
  double value_low = 0.195;
  double value_high = 0.205;
  double mean_holding = 5.0;
};

class PiecewiseConstantGrowth final : public GrowthProcess {
 public:
  PiecewiseConstantGrowth(const StochasticGrowthSpec& spec,
                          std::size_t point_count, double horizon,
                          std::uint64_t seed);

  std::size_t point_count() const override { return offsets_.size() - 1; }
  double value(std::size_t point, double t,
               std::uint32_t& cursor) const override;

  // Number of value switches of one point inside (0, horizon].
  std::size_t switch_count(std::size_t point) const;

 private:
  std::vector<std::size_t> offsets_;  // per-point segment ranges
  std::vector<double> times_;         // segment start times
  std::vector<double> values_;
};

// L_k comparison schedule.
std::size_t comparison_count(std::size_t k);

// Axis-aligned box for candidate centers (defaults to the whole mission
// rectangle; a degenerate box pins the candidate).
struct CenterBox {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
};

struct CscSettings {
  std::size_t trials = 50;           // Q
  bool deterministic = true;
  bool refine = true;                // Algorithm 2: descend before comparing
  bool sample_centers_only = true;   // keep shape fixed, draw centers only
  EllipseParams fixed_shape;         // shape used in centers-only sampling
  bool crn = true;                   // common random numbers per pair
  DescentSettings incumbent_refine;
  DescentSettings candidate_refine;
  StochasticGrowthSpec growth;       // stochastic-mode environment
  std::uint64_t master_seed = 0;
};

struct CscTrial {
  std::size_t k = 0;
  bool accepted = false;
  double candidate_J = 0.0;
  double incumbent_J = 0.0;  // incumbent cost the candidate was tested against
};

struct CscResult {
  std::vector<EllipseParams> params;  // final incumbent
  double J = 0.0;                     // its cached cost
  std::vector<CscTrial> history;
};

// Draws one candidate parameter set (feasible by construction).
std::vector<EllipseParams> sample_candidate(const MissionConfig& config,
                                            const CscSettings& settings,
                                            const CenterBox& box,
                                            std::mt19937_64& rng);

// One acceptance test at trial k. Cost callables receive a per-repetition
// environment seed (ignored by deterministic evaluators). Reported costs are
// the means over the evaluated repetitions.
struct StepOutcome {
  bool accepted = false;
  double candidate_J = 0.0;
  double incumbent_J = 0.0;
};
StepOutcome csc_step(std::size_t k, bool deterministic, bool crn,
                     const std::function<double(std::uint64_t)>& candidate_cost,
                     const std::function<double(std::uint64_t)>& incumbent_cost,
                     std::mt19937_64& rep_rng);

// Full comparison search from `init`. The candidate box defaults to the
// mission rectangle unless `box` is supplied.
CscResult run_search(const MissionConfig& config,
                     const std::vector<EllipseParams>& init,
                     const CscSettings& settings, const SimOptions& options,
                     const CenterBox* box = nullptr);

}  // namespace csc
}  // namespace pmon
