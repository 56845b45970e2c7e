#include "pmon/ipa.hpp"

#include <cmath>

namespace pmon {
namespace ipa {

PositionSensitivity position_sensitivity(const EllipseParams& params,
                                         double rho,
                                         const ParamGrad& rho_sens) {
  const PositionJacobian jac = position_param_jacobian(params, rho);
  const Vec2 frho = position_rho_derivative(params, rho);
  PositionSensitivity s;
  for (std::size_t j = 0; j < kParamsPerAgent; ++j) {
    s.x[j] = jac.x[j] + frho.x * rho_sens[j];
    s.y[j] = jac.y[j] + frho.y * rho_sens[j];
  }
  return s;
}

ParamGrad distance_param_gradient(Vec2 agent, const PositionSensitivity& sens,
                                  Vec2 point) {
  ParamGrad g{};
  const double dx = agent.x - point.x;
  const double dy = agent.y - point.y;
  const double D = std::sqrt(dx * dx + dy * dy);
  if (D < kDistanceTol) return g;
  for (std::size_t j = 0; j < kParamsPerAgent; ++j)
    g[j] = (dx * sens.x[j] + dy * sens.y[j]) / D;
  return g;
}

ParamGrad gradient_rate(Vec2 agent, const PositionSensitivity& sens,
                        Vec2 point, double r, double C, double B,
                        double miss_others) {
  ParamGrad out{};
  const double dx = agent.x - point.x;
  const double dy = agent.y - point.y;
  const double D = std::sqrt(dx * dx + dy * dy);
  if (D > r || D < kDistanceTol) return out;
  // -B * (-1/(C r)) * dD/dU * miss_others
  const double factor = B / (C * r) * miss_others / D;
  for (std::size_t j = 0; j < kParamsPerAgent; ++j)
    out[j] = factor * (dx * sens.x[j] + dy * sens.y[j]);
  return out;
}

std::optional<std::vector<double>> event_time_gradient(
    const std::vector<double>& grad_row, double rate_minus,
    double singularity_tol) {
  if (std::abs(rate_minus) < singularity_tol) return std::nullopt;
  std::vector<double> g(grad_row.size());
  for (std::size_t j = 0; j < grad_row.size(); ++j)
    g[j] = -grad_row[j] / rate_minus;
  return g;
}

void apply_event_reset(EventKind kind, std::vector<double>& grad_row) {
  if (kind == EventKind::kHitZero) {
    for (double& v : grad_row) v = 0.0;
  }
  // kLeaveZero: dynamics are continuous across the event, row unchanged.
}

void GradIntegrator::add_segment(double h, const std::vector<double>& before,
                                 const std::vector<double>& after) {
  const double half = 0.5 * h;
  for (std::size_t j = 0; j < total_.size(); ++j)
    total_[j] += half * (before[j] + after[j]);
}

}  // namespace ipa
}  // namespace pmon
