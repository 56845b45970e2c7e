// pmon/simulator.hpp -- hybrid-system integrator for the monitoring model.
//
// Agent anomalies advance by the exact unit-speed flow (arc-length inversion,
// stable for arbitrarily thin ellipses); per-point uncertainty rates are
// frozen at cell starts for the whole cell. Hit-zero events are localized
// exactly within that model by linear interpolation, R is clamped to zero
// there, and the point holds the boundary arc for the remainder of the cell.
// Every freeze time is parameter-independent, so the co-integrated gradient
// rows track the derivative of the discrete cost up to the smooth quadrature
// error of the anomaly-path sensitivity.  Boundary-arc exits are detected by
// the sign of A - B*P flipping positive between evaluations; the crossing tau
// is interpolated between the two evaluations, the point stays parked for one
// more cell, and R restarts at the following evaluation t with the growth
// (t - tau)/2 * g taken at the detecting evaluation. That rule reproduces the
// frozen-rate law at both edges of the detecting cell, keeping the discrete
// cost C1 in the parameters as the detecting cell index flips, so central
// differences see the same slope the gradient rows compute.
//
// The cost J = integral of sum_i R_i is accumulated by trapezoid over every
// sub-interval, which is exact for the frozen-rate model; with gradients
// enabled the gradient rows are co-integrated on the same breakpoints, making
// grad J the sample-path derivative of the discretized J.
//
// One simulate() call is single-threaded and deterministic: identical
// (config, params, options) produce bit-identical outcomes.  Distinct calls
// may run concurrently; a shared GrowthProcess is only read.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pmon/ipa.hpp"
#include "pmon/model.hpp"
#include "pmon/trajectory.hpp"

namespace pmon {

using ipa::EventKind;

struct SimState {
  std::vector<double> rho;  // one anomaly per agent
  std::vector<double> R;    // one uncertainty per point
  // Boundary-exit crossings awaiting their ramp reconstruction (see below),
  // as absolute times; NaN = none. Empty means no exit is in flight.
  std::vector<double> ramp_tau;
};

struct SimOptions {
  double dt = 0.01;
  // Events closer than event_tol to a cell boundary are merged into it.
  double event_tol_factor = 1e-3;  // event_tol = dt * factor
  // Absolute clock offset: T stays the duration of this call, while logged
  // event/trace times and growth-process lookups are start_time-relative.
  double start_time = 0.0;
  const GrowthProcess* growth = nullptr;  // overrides MissionConfig::A
  std::optional<SimState> initial;        // resume point; default from config
  std::uint32_t trace_stride = 0;         // cells per trace row, 0 = off
  bool record_event_gradients = false;    // store grad tau on hit-zero events

  double event_tol() const { return dt * event_tol_factor; }
};

struct EventRecord {
  double t = 0.0;
  std::uint32_t point = 0;
  EventKind kind = EventKind::kHitZero;
  bool grazing = false;
  std::vector<double> grad_tau;  // filled only when requested and not grazing
};

struct TraceRow {
  double t = 0.0;
  std::vector<Vec2> agents;
  double sum_R = 0.0;
};

struct SimOutcome {
  double J = 0.0;
  std::vector<double> per_point_J;  // integral of R_i over [0, T]
  std::vector<double> grad_J;       // 5N, agent-major; empty when IPA off
  SimState final_state;
  std::vector<EventRecord> events;
  std::vector<TraceRow> trace;
  std::vector<double> min_distance;  // per point, min over evaluations/agents
  std::size_t grazing_warnings = 0;
};

enum class IpaMode { kOff, kOn };

// Integrates the hybrid system over [0, T]. Throws ConfigError on invalid
// inputs and NumericalError (naming time and point) on non-finite state.
SimOutcome simulate(const MissionConfig& config,
                    const std::vector<EllipseParams>& agents,
                    const SimOptions& options, IpaMode ipa_mode);

struct NormalizedCost {
  double j_normalized = 0.0;   // restricted cost per unit covered area
  double psi = 0.0;            // covered area Psi
  std::size_t covered = 0;     // number of covered cells
  double j_restricted = 0.0;   // integral of R over covered cells only
};

// Per-area cost of a single-agent trajectory over the cells the agent can
// actually affect: cell i counts as covered when B * p exceeds A_i at some
// evaluation time. Each cell carries area L1*L2/M. Throws
// DegenerateCoverageError when no cell is covered.
NormalizedCost normalized_cost(const MissionConfig& config,
                               const EllipseParams& agent,
                               const SimOptions& options);

}  // namespace pmon
