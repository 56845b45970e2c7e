// pmon/ipa.hpp -- exact sample-path gradients of the accumulated-uncertainty
// cost with respect to the ellipse parameters of every agent.
//
// Between events the per-point gradient rows evolve at
//
//   d/dt dR_i/dU_n = -B * (dp_n/dD) * (dD_in/dU_n) * prod_{d!=n} (1 - p_d)
//
// on growth arcs and are constant on boundary arcs.  At a hit-zero event the
// row resets to zero (the post-event boundary dynamics absorb the event-time
// sensitivity exactly); at a leave-zero event the dynamics are continuous and
// the row passes through unchanged.  The cost gradient is the time integral
// of the summed rows, accumulated with the same breakpoints as the cost.
//
// dD/dU_n uses the full position sensitivity of the moving agent: the
// closed-form partials at fixed anomaly plus the anomaly-path term
// (ds/drho)*(drho/dU), which the unit-speed traversal couples to a and b.
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pmon/geometry.hpp"
#include "pmon/trajectory.hpp"

namespace pmon {
namespace ipa {

// Distances below this are treated as coincident with the sample point; the
// distance derivative is left at zero there (the sensing kernel's cusp).
inline constexpr double kDistanceTol = 1e-9;

// |A - B*P| below this at a hit-zero event marks the event as grazing: the
// event-time derivative is unreliable, the gradient row is left untouched
// for that event, and a warning is counted instead of aborting.
inline constexpr double kSingularityTol = 1e-8;

enum class EventKind { kHitZero, kLeaveZero };

// Full sensitivity rows ds_x/dU, ds_y/dU of one agent at one instant.
struct PositionSensitivity {
  ParamGrad x{};
  ParamGrad y{};
};

// Composes the fixed-anomaly Jacobian with the anomaly-path term.
PositionSensitivity position_sensitivity(const EllipseParams& params,
                                         double rho,
                                         const ParamGrad& rho_sens);

// dD/dU for one (agent, point) pair; zero if D < kDistanceTol.
ParamGrad distance_param_gradient(Vec2 agent, const PositionSensitivity& sens,
                                  Vec2 point);

// d p / d D inside the sensing support (value at D == r included).
inline double detection_prob_distance_derivative(double D, double r,
                                                 double C) {
  if (D > r) return 0.0;
  return -1.0 / (C * r);
}

// Interval dynamics of one gradient row block for one agent:
//   -B * (dp_n/dD) * dD/dU_n * miss_others,
// where miss_others = prod_{d != n} (1 - p_d). Zero outside sensing range.
ParamGrad gradient_rate(Vec2 agent, const PositionSensitivity& sens,
                        Vec2 point, double r, double C, double B,
                        double miss_others);

// Event-time derivative at a hit-zero event: -gradR(tau-) / rate(tau-).
// Returns nullopt (grazing) when |rate| < singularity_tol.
std::optional<std::vector<double>> event_time_gradient(
    const std::vector<double>& grad_row, double rate_minus,
    double singularity_tol = kSingularityTol);

// Reset map applied to a gradient row at an event.
void apply_event_reset(EventKind kind, std::vector<double>& grad_row);

// Trapezoidal accumulator for the cost gradient, sharing the integrator's
// segment breakpoints.
class GradIntegrator {
 public:
  explicit GradIntegrator(std::size_t dim) : total_(dim, 0.0) {}
  // Adds one segment of length h with summed rows at both segment ends.
  void add_segment(double h, const std::vector<double>& sum_before,
                   const std::vector<double>& sum_after);
  const std::vector<double>& total() const { return total_; }

 private:
  std::vector<double> total_;
};

}  // namespace ipa
}  // namespace pmon
