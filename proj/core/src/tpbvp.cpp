#include "pmon/tpbvp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pmon/errors.hpp"
#include "pmon/ipa.hpp"

namespace pmon {
namespace tpbvp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::size_t schedule_steps(double T, double dt) {
  const double eps = dt * 1e-9;
  std::size_t k = 0;
  double t = 0.0;
  while (t < T - eps) {
    t = std::min(t + dt, T);
    ++k;
  }
  return k;
}

ControlSchedule ellipse_schedule(const MissionConfig& config,
                                 const std::vector<EllipseParams>& agents,
                                 double dt) {
  SimOptions opts;
  opts.dt = dt;
  opts.trace_stride = 1;
  const SimOutcome sim = simulate(config, agents, opts, IpaMode::kOff);
  const std::size_t rows = sim.trace.size();
  if (rows < 2) throw ConfigError("horizon too short for a heading schedule");

  ControlSchedule sched;
  sched.dt = dt;
  const std::size_t N = agents.size();
  sched.start.resize(N);
  sched.theta.assign(N, std::vector<double>(rows - 1, 0.0));
  for (std::size_t n = 0; n < N; ++n) {
    sched.start[n] = sim.trace.front().agents[n];
    for (std::size_t j = 0; j + 1 < rows; ++j) {
      const Vec2 d = sim.trace[j + 1].agents[n] - sim.trace[j].agents[n];
      sched.theta[n][j] = std::atan2(d.y, d.x);
    }
  }
  return sched;
}

ForwardResult forward_pass(const MissionConfig& config,
                           const ControlSchedule& schedule,
                           const SimOptions& options) {
  config.validate();
  const std::size_t N = schedule.agent_count();
  const std::size_t M = config.point_count();
  if (N != config.agent_count)
    throw ConfigError("schedule agent count does not match mission");
  if (!(schedule.dt > 0.0)) throw ConfigError("schedule.dt must be positive");
  if (schedule.start.size() != N)
    throw ConfigError("schedule.start size does not match agents");
  const std::size_t K = schedule_steps(config.T, schedule.dt);
  if (schedule.step_count() != K)
    throw ConfigError("schedule length does not cover the horizon: need " +
                      std::to_string(K) + " steps");

  ForwardResult out;
  out.steps = K;
  out.pos.assign(N, std::vector<Vec2>(K + 1));
  out.on_boundary.assign(M * (K + 1), 0);
  out.r_positive.assign(M * (K + 1), 0);

  std::vector<Vec2> s = schedule.start;
  for (Vec2& v : s) {
    v.x = std::clamp(v.x, 0.0, config.L1);
    v.y = std::clamp(v.y, 0.0, config.L2);
  }
  std::vector<double> R = config.R0;
  std::vector<std::uint8_t> on_boundary(M, 0), pending(M, 0);
  std::vector<double> rate(M, 0.0), g_prev(M, 0.0);
  std::vector<std::uint32_t> cursors(M, 0);
  std::vector<Vec2> vel(N);
  double t = 0.0, t_prev_eval = 0.0, J = 0.0;
  bool first_eval = true;

  auto evaluate = [&]() {
    for (std::size_t i = 0; i < M; ++i) {
      const Vec2 w = config.points[i];
      const double A_i =
          options.growth
              ? options.growth->value(i, options.start_time + t, cursors[i])
              : config.A[i];
      double miss = 1.0;
      for (std::size_t n = 0; n < N; ++n)
        miss *= (1.0 - detection_prob(s[n], w, config.r, config.C));
      const double g = A_i - config.B * (1.0 - miss);

      if (first_eval) {
        on_boundary[i] = (R[i] == 0.0 && g <= 0.0) ? 1 : 0;
      } else if (pending[i]) {
        pending[i] = 0;
        if (g <= 0.0) {
          on_boundary[i] = 1;
        } else {
          out.events.push_back(
              {t, static_cast<std::uint32_t>(i), EventKind::kLeaveZero, false, {}});
        }
      } else if (on_boundary[i] && g > 0.0) {
        double tau = t;
        const double gp = g_prev[i];
        if (gp < 0.0 && g > gp)
          tau = t_prev_eval + (t - t_prev_eval) * (-gp) / (g - gp);
        out.events.push_back({std::clamp(tau, t_prev_eval, t),
                              static_cast<std::uint32_t>(i),
                              EventKind::kLeaveZero, false, {}});
        on_boundary[i] = 0;
      }
      rate[i] = on_boundary[i] ? 0.0 : g;
      g_prev[i] = g;
    }
    t_prev_eval = t;
    first_eval = false;
  };

  auto advance = [&](double h) {
    if (h == 0.0) return;
    double S = 0.0, SR = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      S += R[i];
      SR += rate[i];
      R[i] += h * rate[i];
      if (R[i] < 0.0) R[i] = 0.0;
    }
    J += h * S + 0.5 * h * h * SR;
    for (std::size_t n = 0; n < N; ++n) {
      s[n].x = std::clamp(s[n].x + h * vel[n].x, 0.0, config.L1);
      s[n].y = std::clamp(s[n].y + h * vel[n].y, 0.0, config.L2);
    }
    t += h;
  };

  auto snapshot = [&](std::size_t j) {
    for (std::size_t n = 0; n < N; ++n) out.pos[n][j] = s[n];
    for (std::size_t i = 0; i < M; ++i) {
      out.on_boundary[i * (K + 1) + j] = on_boundary[i];
      out.r_positive[i * (K + 1) + j] = R[i] > 0.0 ? 1 : 0;
    }
  };

  const double time_eps = schedule.dt * 1e-9;
  const std::size_t iter_cap = 16 * M + 64;
  for (std::size_t j = 0; j < K; ++j) {
    const double cell_end = std::min(t + schedule.dt, config.T);
    for (std::size_t n = 0; n < N; ++n)
      vel[n] = {std::cos(schedule.theta[n][j]), std::sin(schedule.theta[n][j])};
    evaluate();
    snapshot(j);

    std::size_t iters = 0;
    while (true) {
      const double h_rem = cell_end - t;
      double best = kInf;
      for (std::size_t i = 0; i < M; ++i) {
        if (on_boundary[i] || rate[i] >= 0.0) continue;
        best = std::min(best, R[i] / (-rate[i]));
      }
      if (best <= h_rem) {
        if (++iters > iter_cap)
          throw NumericalError("event iteration cap exceeded at t=" +
                               std::to_string(t));
        std::vector<std::size_t> hits;
        for (std::size_t i = 0; i < M; ++i) {
          if (on_boundary[i] || rate[i] >= 0.0) continue;
          if (R[i] / (-rate[i]) <= best) hits.push_back(i);
        }
        advance(best);
        for (std::size_t i : hits) {
          out.events.push_back(
              {t, static_cast<std::uint32_t>(i), EventKind::kHitZero,
               std::abs(rate[i]) < ipa::kSingularityTol, {}});
          R[i] = 0.0;
          pending[i] = 1;
        }
        if (cell_end - t <= time_eps) break;
        evaluate();
        continue;
      }
      advance(h_rem);
      break;
    }
    for (std::size_t i = 0; i < M; ++i)
      if (!std::isfinite(R[i]))
        throw NumericalError("non-finite uncertainty at t=" +
                             std::to_string(t) + ", point " +
                             std::to_string(i));
  }
  evaluate();
  snapshot(K);
  std::stable_sort(
      out.events.begin(), out.events.end(),
      [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
  out.J = J;
  return out;
}

CostateField backward_pass(const MissionConfig& config,
                           const ControlSchedule& schedule,
                           const ForwardResult& fwd) {
  const std::size_t N = schedule.agent_count();
  const std::size_t M = config.point_count();
  const std::size_t K = fwd.steps;
  const std::size_t stride = K + 1;

  CostateField cf;
  cf.lambda.assign(M * stride, 0.0);
  cf.mu.assign(N, std::vector<Vec2>(stride, Vec2{0.0, 0.0}));

  // Cell lengths (the terminal cell may be short of dt).
  std::vector<double> hs(K, schedule.dt);
  if (K > 0) {
    const double tail = config.T - schedule.dt * static_cast<double>(K - 1);
    hs[K - 1] = std::clamp(tail, 0.0, schedule.dt);
  }

  for (std::size_t jj = K; jj-- > 0;) {
    const double h = hs[jj];
    // lambda: -1 slope on interior arcs, pinned to zero on boundary arcs.
    for (std::size_t i = 0; i < M; ++i) {
      const std::size_t idx = i * stride + jj;
      cf.lambda[idx] = fwd.on_boundary[idx] ? 0.0 : cf.lambda[idx + 1] + h;
    }
    // mu: backward Euler with the rate evaluated at the cell start.
    for (std::size_t n = 0; n < N; ++n) {
      const Vec2 sn = fwd.pos[n][jj];
      double mx = 0.0, my = 0.0;  // mu-dot components
      for (std::size_t i = 0; i < M; ++i) {
        if (!fwd.r_positive[i * stride + jj]) continue;
        const Vec2 w = config.points[i];
        const double dx = sn.x - w.x, dy = sn.y - w.y;
        const double D = std::sqrt(dx * dx + dy * dy);
        if (D > config.r || D < ipa::kDistanceTol) continue;
        double miss_others = 1.0;
        for (std::size_t d = 0; d < N; ++d) {
          if (d == n) continue;
          miss_others *=
              1.0 - detection_prob(fwd.pos[d][jj], w, config.r, config.C);
        }
        const double lam = cf.lambda[i * stride + jj];
        const double f = config.B * lam /
                         (config.C * config.r * D) * miss_others;
        mx -= f * dx;
        my -= f * dy;
      }
      cf.mu[n][jj].x = cf.mu[n][jj + 1].x - h * mx;
      cf.mu[n][jj].y = cf.mu[n][jj + 1].y - h * my;
    }
  }
  return cf;
}

std::vector<std::vector<double>> heading_gradient(
    const ControlSchedule& schedule, const CostateField& costates) {
  const std::size_t N = schedule.agent_count();
  const std::size_t K = schedule.step_count();
  std::vector<std::vector<double>> g(N, std::vector<double>(K, 0.0));
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t j = 0; j < K; ++j) {
      const Vec2 mu = costates.mu[n][j];
      g[n][j] = -mu.x * std::sin(schedule.theta[n][j]) +
                mu.y * std::cos(schedule.theta[n][j]);
    }
  }
  return g;
}

TpbvpResult solve(const MissionConfig& config, const ControlSchedule& init,
                  const TpbvpSettings& settings, const SimOptions& options) {
  if (!(settings.eta0 >= 0.0)) throw ConfigError("tpbvp.eta0 must be >= 0");

  TpbvpResult res;
  res.schedule = init;
  ForwardResult fwd = forward_pass(config, res.schedule, options);
  res.J = fwd.J;
  res.J_history.push_back(res.J);

  const std::size_t N = res.schedule.agent_count();
  const std::size_t K = res.schedule.step_count();
  double eta = settings.eta0;

  for (std::size_t iter = 1; iter <= settings.max_iters; ++iter) {
    const CostateField cf = backward_pass(config, res.schedule, fwd);
    const auto g = heading_gradient(res.schedule, cf);
    // dJ/dtheta_{n,j} carries the cell length as quadrature weight.
    double gnorm = 0.0;
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t j = 0; j < K; ++j)
        gnorm = std::max(gnorm, std::abs(res.schedule.dt * g[n][j]));
    if (gnorm < settings.epsilon) {
      res.status = TpbvpStatus::kConverged;
      return res;
    }

    double eta_try = std::min(eta * settings.expand, 1e6);
    bool accepted = false;
    ControlSchedule cand;
    ForwardResult fwd_cand;
    for (std::size_t hlv = 0; hlv <= settings.max_halvings; ++hlv) {
      cand = res.schedule;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t j = 0; j < K; ++j)
          cand.theta[n][j] -= eta_try * res.schedule.dt * g[n][j];
      fwd_cand = forward_pass(config, cand, options);
      if (fwd_cand.J < res.J) {
        accepted = true;
        break;
      }
      eta_try *= settings.shrink;
    }
    if (!accepted) {
      res.status = TpbvpStatus::kConverged;
      return res;
    }
    res.schedule = std::move(cand);
    fwd = std::move(fwd_cand);
    res.J = fwd.J;
    res.J_history.push_back(res.J);
    eta = eta_try;
  }
  res.status = TpbvpStatus::kIterationCap;
  return res;
}

}  // namespace tpbvp
}  // namespace pmon
