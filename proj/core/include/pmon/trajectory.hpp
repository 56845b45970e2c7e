// pmon/trajectory.hpp -- elliptical agent trajectories and their derivatives.
//
// An agent trajectory is the ellipse
//
//   s_x(rho) = X + a cos(rho) cos(phi) - b sin(rho) sin(phi)
//   s_y(rho) = Y + a cos(rho) sin(phi) + b sin(rho) cos(phi)
//
// traversed at unit speed, which fixes the anomaly rate
//
//   drho/dt = [a^2 sin^2(rho) + b^2 cos^2(rho)]^(-1/2).
//
// Parameter order everywhere is (X, Y, a, b, phi); the initial anomaly rho0
// is carried with the parameters but is not a descent variable.
#pragma once

#include <array>
#include <cstddef>

#include "pmon/geometry.hpp"

namespace pmon {

inline constexpr double kMinMinorAxis = 1e-6;
inline constexpr std::size_t kParamsPerAgent = 5;

enum ParamIndex : std::size_t { kX = 0, kY = 1, kA = 2, kB = 3, kPhi = 4 };

// One gradient block with respect to (X, Y, a, b, phi).
using ParamGrad = std::array<double, kParamsPerAgent>;

struct EllipseParams {
  double X = 0.0;
  double Y = 0.0;
  double a = 1.0;
  double b = 1.0;
  double phi = 0.0;
  double rho0 = 0.0;
};

struct PositionJacobian {
  ParamGrad x{};  // d s_x / d(X,Y,a,b,phi) at fixed rho
  ParamGrad y{};  // d s_y / d(X,Y,a,b,phi) at fixed rho
};

// Sensitivity of the anomaly rate h(rho; a, b) (phi, X, Y do not enter).
struct AnomalyRateDerivs {
  double d_rho = 0.0;
  double d_a = 0.0;
  double d_b = 0.0;
};

Vec2 position(const EllipseParams& p, double rho);

// d(s_x, s_y)/d rho at fixed parameters.
Vec2 position_rho_derivative(const EllipseParams& p, double rho);

double anomaly_rate(const EllipseParams& p, double rho);

AnomalyRateDerivs anomaly_rate_derivs(const EllipseParams& p, double rho);

// Closed-form partials of position with respect to (X, Y, a, b, phi) at
// fixed rho. The full sensitivity of the moving agent additionally needs
// the rho-path term: ds/dU = jacobian + (ds/drho) * (drho/dU).
PositionJacobian position_param_jacobian(const EllipseParams& p, double rho);

// Arc length along the ellipse from anomaly 0 to rho. Odd and strictly
// increasing in rho; one full turn has length arc_length(p, 2*pi).
double arc_length(const EllipseParams& p, double rho);

// Anomaly reached after travelling a signed arc ds from rho at unit speed,
// i.e. the exact flow of drho/dt = h(rho) over duration ds. Solved by
// inverting arc_length, so the result is accurate for arbitrarily thin
// ellipses where an explicit Euler step on rho would overshoot the turns.
double advance_anomaly(const EllipseParams& p, double rho, double ds);

// Half-widths of the axis-aligned bounding box of the rotated ellipse.
double bounding_half_width_x(const EllipseParams& p);
double bounding_half_width_y(const EllipseParams& p);

// Reporting form: phi wrapped into [0, pi), rho0 into [0, 2*pi), shifted
// jointly so the traced path is unchanged.
EllipseParams wrap_angles(const EllipseParams& p);

}  // namespace pmon
