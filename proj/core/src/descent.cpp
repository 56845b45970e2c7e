#include "pmon/descent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmon/errors.hpp"

namespace pmon {

namespace {

constexpr double kTrigEps = 1e-12;   // treat cos/sin below this as zero
constexpr double kActiveTol = 1e-9;  // bound-activity detection

// Largest semi-major axis that keeps the rotated ellipse inside the
// rectangle for fixed (b, phi). Always >= b once b fits as a circle.
double max_semi_major(const MissionConfig& cfg, double b, double phi) {
  const double cp = std::cos(phi), sp = std::sin(phi);
  double ax = std::numeric_limits<double>::infinity();
  double ay = std::numeric_limits<double>::infinity();
  const double hx = 0.5 * cfg.L1, hy = 0.5 * cfg.L2;
  if (std::abs(cp) > kTrigEps)
    ax = std::sqrt(std::max(0.0, hx * hx - b * b * sp * sp)) / std::abs(cp);
  if (std::abs(sp) > kTrigEps)
    ay = std::sqrt(std::max(0.0, hy * hy - b * b * cp * cp)) / std::abs(sp);
  // guard the a >= b invariant against cancellation when b touches a bound
  return std::max(b, std::min(ax, ay));
}

struct ComponentBox {
  double lo = 0.0;
  double hi = 0.0;
  bool bounded = true;
};

double component_value(const EllipseParams& p, std::size_t j) {
  switch (j) {
    case kX: return p.X;
    case kY: return p.Y;
    case kA: return p.a;
    case kB: return p.b;
    default: return p.phi;
  }
}

// Box for one scalar component at the current parameter values (the axis
// boxes are coupled through b and phi, evaluated at the current iterate).
ComponentBox component_box(const MissionConfig& cfg, const EllipseParams& p,
                           std::size_t j) {
  const double b_cap = 0.5 * std::min(cfg.L1, cfg.L2);
  switch (j) {
    case kX: {
      const double w = bounding_half_width_x(p);
      return {w, cfg.L1 - w, true};
    }
    case kY: {
      const double w = bounding_half_width_y(p);
      return {w, cfg.L2 - w, true};
    }
    case kA:
      return {std::max(p.b, kMinMinorAxis), max_semi_major(cfg, p.b, p.phi),
              true};
    case kB:
      return {kMinMinorAxis, std::min(p.a, b_cap), true};
    default:
      return {0.0, 0.0, false};  // phi unconstrained
  }
}

}  // namespace

std::vector<double> pack_params(const std::vector<EllipseParams>& agents) {
  std::vector<double> v;
  v.reserve(agents.size() * kParamsPerAgent);
  for (const EllipseParams& p : agents) {
    v.push_back(p.X);
    v.push_back(p.Y);
    v.push_back(p.a);
    v.push_back(p.b);
    v.push_back(p.phi);
  }
  return v;
}

std::vector<EllipseParams> unpack_params(const std::vector<double>& v,
                                         const std::vector<EllipseParams>& like) {
  std::vector<EllipseParams> agents = like;
  for (std::size_t n = 0; n < agents.size(); ++n) {
    agents[n].X = v[n * kParamsPerAgent + kX];
    agents[n].Y = v[n * kParamsPerAgent + kY];
    agents[n].a = v[n * kParamsPerAgent + kA];
    agents[n].b = v[n * kParamsPerAgent + kB];
    agents[n].phi = v[n * kParamsPerAgent + kPhi];
  }
  return agents;
}

EllipseParams project_feasible(const MissionConfig& config,
                               const EllipseParams& p) {
  const double b_cap = 0.5 * std::min(config.L1, config.L2);
  if (kMinMinorAxis > b_cap)
    throw InfeasibleError("mission space cannot fit the minimum ellipse");

  EllipseParams q = p;
  q.a = std::max(q.a, kMinMinorAxis);
  q.b = std::clamp(q.b, kMinMinorAxis, std::min(q.a, b_cap));
  const double a_max = max_semi_major(config, q.b, q.phi);
  q.a = std::clamp(q.a, q.b, a_max);

  const double wx = bounding_half_width_x(q);
  const double wy = bounding_half_width_y(q);
  q.X = std::clamp(q.X, wx, std::max(wx, config.L1 - wx));
  q.Y = std::clamp(q.Y, wy, std::max(wy, config.L2 - wy));
  return q;
}

std::vector<EllipseParams> project_feasible(
    const MissionConfig& config, const std::vector<EllipseParams>& agents) {
  std::vector<EllipseParams> out;
  out.reserve(agents.size());
  for (const EllipseParams& p : agents)
    out.push_back(project_feasible(config, p));
  return out;
}

std::vector<double> projected_gradient(const MissionConfig& config,
                                       const std::vector<EllipseParams>& agents,
                                       const std::vector<double>& grad,
                                       std::vector<std::uint8_t>* active) {
  std::vector<double> g = grad;
  if (active) active->assign(g.size(), 0);
  for (std::size_t n = 0; n < agents.size(); ++n) {
    for (std::size_t j = 0; j < kParamsPerAgent; ++j) {
      const ComponentBox box = component_box(config, agents[n], j);
      if (!box.bounded) continue;
      const std::size_t c = n * kParamsPerAgent + j;
      const double value = component_value(agents[n], j);
      const double tol = kActiveTol * std::max(1.0, std::abs(value));
      const bool at_lo = value - box.lo <= tol;
      const bool at_hi = box.hi - value <= tol;
      if ((at_lo && g[c] > 0.0) || (at_hi && g[c] < 0.0)) {
        g[c] = 0.0;
        if (active) (*active)[c] = 1;
      }
    }
  }
  return g;
}

DescentResult optimize(const MissionConfig& config,
                       const std::vector<EllipseParams>& init,
                       const DescentSettings& settings,
                       const SimOptions& options) {
  if (!(settings.eta0 >= 0.0)) throw ConfigError("optimizer.eta0 must be >= 0");
  if (!(settings.shrink > 0.0 && settings.shrink < 1.0))
    throw ConfigError("optimizer.shrink must be in (0, 1)");
  if (!(settings.expand >= 1.0))
    throw ConfigError("optimizer.expand must be >= 1");

  DescentResult res;
  res.params = project_feasible(config, init);

  SimOutcome sim = simulate(config, res.params, options, IpaMode::kOn);
  ++res.gradient_evaluations;
  res.J = sim.J;

  double eta = settings.eta0;
  // Trial steps measure parameter-space length (the direction is scaled to
  // unit infinity norm), so cap growth at the mission scale: the raw
  // gradient's magnitude swings over many orders near grazing events and
  // must not set the step size.
  const double eta_cap = 0.5 * std::max(config.L1, config.L2);
  std::vector<std::uint8_t> active;
  std::vector<double> ptilde =
      projected_gradient(config, res.params, sim.grad_J, &active);
  auto inf_norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  double gnorm = inf_norm(ptilde);
  res.trace.push_back({0, res.J, gnorm, 0.0, active});

  std::vector<EllipseParams> best_params = res.params;
  double best_J = res.J;

  for (std::size_t iter = 1; iter <= settings.max_iters; ++iter) {
    if (gnorm < settings.epsilon || gnorm == 0.0) {
      res.status = DescentStatus::kConverged;
      break;
    }

    const std::vector<double> base = pack_params(res.params);
    double step_len = 0.0;
    if (settings.step_rule == StepRule::kConstant) {
      std::vector<double> stepped = base;
      for (std::size_t c = 0; c < stepped.size(); ++c)
        stepped[c] -= settings.eta0 * sim.grad_J[c];
      res.params =
          project_feasible(config, unpack_params(stepped, res.params));
      sim = simulate(config, res.params, options, IpaMode::kOn);
      ++res.gradient_evaluations;
      res.J = sim.J;
      step_len = settings.eta0;
    } else {
      double eta_try = std::min(eta * settings.expand, eta_cap);
      bool accepted = false;
      std::vector<EllipseParams> cand;
      double J_cand = 0.0;
      for (std::size_t h = 0; h <= settings.max_halvings; ++h) {
        std::vector<double> stepped = base;
        for (std::size_t c = 0; c < stepped.size(); ++c)
          stepped[c] -= (eta_try / gnorm) * ptilde[c];
        cand = project_feasible(config, unpack_params(stepped, res.params));
        J_cand = simulate(config, cand, options, IpaMode::kOff).J;
        ++res.cost_evaluations;
        if (J_cand < res.J) {
          accepted = true;
          break;
        }
        eta_try *= settings.shrink;
      }
      if (!accepted) {
        // No decrease within the halving budget: the iterate is as converged
        // as the line search can certify.
        res.status = DescentStatus::kConverged;
        break;
      }
      res.params = std::move(cand);
      res.J = J_cand;
      eta = eta_try;
      sim = simulate(config, res.params, options, IpaMode::kOn);
      ++res.gradient_evaluations;
      step_len = eta_try;
    }

    ptilde = projected_gradient(config, res.params, sim.grad_J, &active);
    gnorm = inf_norm(ptilde);
    res.trace.push_back({iter, res.J, gnorm, step_len, active});
    if (res.J < best_J) {
      best_J = res.J;
      best_params = res.params;
    }
    if (iter == settings.max_iters)
      res.status = gnorm < settings.epsilon ? DescentStatus::kConverged
                                            : DescentStatus::kIterationCap;
  }
  res.params = std::move(best_params);
  res.J = best_J;
  return res;
}

}  // namespace pmon
