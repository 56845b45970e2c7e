// pmon/descent.hpp -- projected gradient descent over ellipse parameters.
//
// The decision vector stacks (X, Y, a, b, phi) agent-major; rho0 rides along
// untouched (it is randomized across restarts, not descended on).  Iterates
// are kept feasible by clamping a (then b) to the axis bounds that let the
// rotated ellipse fit the mission rectangle, then clamping the center into
// the inset box [w_x, L1-w_x] x [w_y, L2-w_y] built from the rotated
// bounding-box half-widths
//
//   w_x = sqrt(a^2 cos^2 phi + b^2 sin^2 phi),
//   w_y = sqrt(a^2 sin^2 phi + b^2 cos^2 phi).
//
// The default step rule is backtracking: the step moves along the projected
// gradient scaled to unit infinity norm, so eta is a parameter-space length,
// and the trial length is halved until the cost decreases (up to a fixed
// number of halvings), making the cost sequence nonincreasing.  A constant
// rule (fixed eta0 times the raw gradient) is available for studies; it
// carries no monotonicity guarantee.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pmon/model.hpp"
#include "pmon/simulator.hpp"
#include "pmon/trajectory.hpp"

namespace pmon {

enum class StepRule { kConstant, kBacktracking };

struct DescentSettings {
  StepRule step_rule = StepRule::kBacktracking;
  double eta0 = 1e-2;          // initial step size
  double epsilon = 1e-3;       // stop when ||projected grad||_inf < epsilon
  std::size_t max_iters = 500;
  double shrink = 0.5;         // backtracking factor
  double expand = 2.0;         // step growth after an accepted iteration
  std::size_t max_halvings = 30;
};

enum class DescentStatus { kConverged, kIterationCap };

struct DescentIterate {
  std::size_t iter = 0;
  double J = 0.0;
  double grad_norm = 0.0;  // ||projected grad||_inf at this iterate
  double step = 0.0;       // accepted step size (0 for the initial row)
  std::vector<std::uint8_t> active;  // per-component active box constraint
};

struct DescentResult {
  std::vector<EllipseParams> params;
  double J = 0.0;
  DescentStatus status = DescentStatus::kConverged;
  std::vector<DescentIterate> trace;
  std::size_t cost_evaluations = 0;      // cost-only simulations
  std::size_t gradient_evaluations = 0;  // gradient-carrying simulations
};

// Stacks/unstacks the descent vector. rho0 is taken from `like` on unpack.
std::vector<double> pack_params(const std::vector<EllipseParams>& agents);
std::vector<EllipseParams> unpack_params(const std::vector<double>& v,
                                         const std::vector<EllipseParams>& like);

// Nearest feasible parameters: axis order a >= b >= b_min, ellipse inside
// the mission rectangle. Throws InfeasibleError when even a point-like agent
// cannot fit.
EllipseParams project_feasible(const MissionConfig& config,
                               const EllipseParams& p);
std::vector<EllipseParams> project_feasible(
    const MissionConfig& config, const std::vector<EllipseParams>& agents);

// Gradient with components zeroed where the matching box constraint is
// active and a descent step would leave the box; `active` (optional) gets
// one flag per component.
std::vector<double> projected_gradient(const MissionConfig& config,
                                       const std::vector<EllipseParams>& agents,
                                       const std::vector<double>& grad,
                                       std::vector<std::uint8_t>* active = nullptr);

// Projected gradient descent of simulate()'s cost from `init`. `options`
// supplies the integrator settings (and optionally a growth realization, in
// which case the run optimizes that realized sample path).
DescentResult optimize(const MissionConfig& config,
                       const std::vector<EllipseParams>& init,
                       const DescentSettings& settings,
                       const SimOptions& options);

}  // namespace pmon
