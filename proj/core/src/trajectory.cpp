#include "pmon/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace pmon {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

Vec2 position(const EllipseParams& p, double rho) {
  const double cr = std::cos(rho), sr = std::sin(rho);
  const double cp = std::cos(p.phi), sp = std::sin(p.phi);
  return {p.X + p.a * cr * cp - p.b * sr * sp,
          p.Y + p.a * cr * sp + p.b * sr * cp};
}

Vec2 position_rho_derivative(const EllipseParams& p, double rho) {
  const double cr = std::cos(rho), sr = std::sin(rho);
  const double cp = std::cos(p.phi), sp = std::sin(p.phi);
  return {-p.a * sr * cp - p.b * cr * sp,
          -p.a * sr * sp + p.b * cr * cp};
}

double anomaly_rate(const EllipseParams& p, double rho) {
  const double sr = std::sin(rho), cr = std::cos(rho);
  const double q = p.a * p.a * sr * sr + p.b * p.b * cr * cr;
  return 1.0 / std::sqrt(q);
}

AnomalyRateDerivs anomaly_rate_derivs(const EllipseParams& p, double rho) {
  const double sr = std::sin(rho), cr = std::cos(rho);
  const double q = p.a * p.a * sr * sr + p.b * p.b * cr * cr;
  const double qm32 = 1.0 / (q * std::sqrt(q));
  AnomalyRateDerivs d;
  d.d_rho = -0.5 * (p.a * p.a - p.b * p.b) * std::sin(2.0 * rho) * qm32;
  d.d_a = -p.a * sr * sr * qm32;
  d.d_b = -p.b * cr * cr * qm32;
  return d;
}

PositionJacobian position_param_jacobian(const EllipseParams& p, double rho) {
  const double cr = std::cos(rho), sr = std::sin(rho);
  const double cp = std::cos(p.phi), sp = std::sin(p.phi);
  PositionJacobian j;
  j.x[kX] = 1.0;
  j.x[kY] = 0.0;
  j.x[kA] = cr * cp;
  j.x[kB] = -sr * sp;
  j.x[kPhi] = -p.a * cr * sp - p.b * sr * cp;
  j.y[kX] = 0.0;
  j.y[kY] = 1.0;
  j.y[kA] = cr * sp;
  j.y[kB] = sr * cp;
  j.y[kPhi] = p.a * cr * cp - p.b * sr * sp;
  return j;
}

double arc_length(const EllipseParams& p, double rho) {
  const double a = p.a, b = p.b;
  if (a == b) return a * rho;
  if (b > a) {
    // q(rho; a, b) = q(rho - pi/2; b, a), so shift into the a >= b case.
    EllipseParams s = p;
    s.a = b;
    s.b = a;
    return arc_length(s, rho - 0.5 * kPi) - arc_length(s, -0.5 * kPi);
  }
  const double k = std::sqrt((a - b) * (a + b)) / a;
  // integral_0^rho sqrt(a^2 sin^2 u + b^2 cos^2 u) du, mapped onto the
  // incomplete elliptic integral of the second kind by u -> pi/2 - w.
  return a * (std::comp_ellint_2(k) - std::ellint_2(k, 0.5 * kPi - rho));
}

double advance_anomaly(const EllipseParams& p, double rho, double ds) {
  if (ds == 0.0) return rho;
  if (p.a == p.b) return rho + ds / p.a;
  const double target = arc_length(p, rho) + ds;
  // arc_length gains at least min(a, b) per unit anomaly, which brackets
  // the root; safeguarded Newton then converges in a few iterations.
  const double span = ds / std::min(p.a, p.b);
  double lo = rho, hi = rho + span;
  if (ds < 0.0) std::swap(lo, hi);
  double x = std::clamp(rho + ds * anomaly_rate(p, rho), lo, hi);
  const double tol = 1e-12 * (1.0 + std::abs(target));
  for (int it = 0; it < 60; ++it) {
    const double f = arc_length(p, x) - target;
    if (std::abs(f) <= tol) break;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double next = x - f * anomaly_rate(p, x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  return x;
}

double bounding_half_width_x(const EllipseParams& p) {
  const double cp = std::cos(p.phi), sp = std::sin(p.phi);
  return std::sqrt(p.a * p.a * cp * cp + p.b * p.b * sp * sp);
}

double bounding_half_width_y(const EllipseParams& p) {
  const double cp = std::cos(p.phi), sp = std::sin(p.phi);
  return std::sqrt(p.a * p.a * sp * sp + p.b * p.b * cp * cp);
}

EllipseParams wrap_angles(const EllipseParams& p) {
  EllipseParams w = p;
  // Shifting phi by pi maps the ellipse onto itself when rho0 shifts by pi
  // as well, so reduce phi modulo pi and compensate in rho0.
  double k = std::floor(w.phi / kPi);
  w.phi -= k * kPi;
  w.rho0 += k * kPi;
  w.rho0 -= std::floor(w.rho0 / (2.0 * kPi)) * (2.0 * kPi);
  return w;
}

}  // namespace pmon
