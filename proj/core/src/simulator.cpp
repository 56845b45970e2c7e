#include "pmon/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pmon/errors.hpp"

namespace pmon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string at_time(double t) { return " at t=" + std::to_string(t); }

// Integration workspace. All per-evaluation quantities are recomputed at
// sub-interval starts; rates stay frozen across one sub-interval.
struct Engine {
  const MissionConfig& cfg;
  const std::vector<EllipseParams>& prm;
  const SimOptions& opt;
  const bool ipa_on;

  std::size_t N, M, dim;

  // state
  std::vector<double> rho;
  std::vector<double> R;
  std::vector<std::uint8_t> on_boundary;
  std::vector<std::uint8_t> pending_entry;  // hit-zero awaiting branch choice
  // Boundary-arc exit in flight: the crossing tau was interpolated at the
  // detecting evaluation; the point stays parked for that one cell and R is
  // rebuilt at the next evaluation from the interpolated-rate trapezoid over
  // [tau, t]. Without the ramp the restart would quantize to the evaluation
  // grid and the cost would kink every time the detecting cell index flips.
  std::vector<std::uint8_t> exit_ramp;
  std::vector<double> ramp_tau;  // crossing time, internal clock
  // Anomaly-path sensitivity in integrating-factor form: d rho/d theta =
  // h(rho) * sigma. The stiff feedback term (dh/drho, of order a/b^2 near
  // the turns of a thin ellipse) is carried exactly by the h factor, leaving
  // d sigma/dt = (dh/dtheta)/h, a plain bounded quadrature.
  std::vector<double> rho_sens_scaled;  // N x 5
  std::vector<double> gradR;            // M x dim

  // evaluation-frozen quantities
  std::vector<Vec2> pos;
  std::vector<double> anom;
  std::vector<ipa::PositionSensitivity> pos_sens;
  std::vector<Vec2> pos_prev;
  std::vector<ipa::PositionSensitivity> pos_sens_prev;
  std::vector<double> D_prev;  // M x N agent-point distances, last evaluation
  std::vector<double> rate;      // per point
  std::vector<double> g_cur;     // A - B*P per point
  std::vector<double> g_prev;    // at previous evaluation
  std::vector<double> grad_rate; // M x dim, zeroed while parked at zero
  std::vector<double> grad_g;      // M x dim, unclamped d(A - B*P)/d theta
  std::vector<double> grad_g_prev; // at previous evaluation
  std::vector<double> ramp_dtau;   // M x dim, d tau/d theta of in-flight exits
  std::vector<double> grad_mass;   // gradient of ramp-cell cost installs
  std::vector<double> A_cur;
  std::vector<std::uint32_t> cursors;
  std::vector<double> p_buf, d_buf, miss_buf;
  double t_prev_eval = 0.0;
  bool first_eval = true;

  // accumulators
  double t = 0.0;
  double J = 0.0;
  std::vector<double> per_point_J;
  ipa::GradIntegrator grad_integ;
  std::vector<double> G_before, RS;
  SimOutcome out;

  Engine(const MissionConfig& c, const std::vector<EllipseParams>& p,
         const SimOptions& o, bool ipa)
      : cfg(c), prm(p), opt(o), ipa_on(ipa), grad_integ(0) {
    N = prm.size();
    M = cfg.point_count();
    dim = ipa_on ? kParamsPerAgent * N : 0;

    rho.resize(N);
    R = cfg.R0;
    if (opt.initial) {
      if (opt.initial->rho.size() != N || opt.initial->R.size() != M)
        throw ConfigError("options.initial state size mismatch");
      rho = opt.initial->rho;
      R = opt.initial->R;
    } else {
      for (std::size_t n = 0; n < N; ++n) rho[n] = prm[n].rho0;
    }
    on_boundary.assign(M, 0);
    pending_entry.assign(M, 0);
    exit_ramp.assign(M, 0);
    ramp_tau.assign(M, std::numeric_limits<double>::quiet_NaN());
    if (opt.initial && !opt.initial->ramp_tau.empty()) {
      if (opt.initial->ramp_tau.size() != M)
        throw ConfigError("options.initial state size mismatch");
      for (std::size_t i = 0; i < M; ++i) {
        const double v = opt.initial->ramp_tau[i];
        if (std::isfinite(v)) {
          exit_ramp[i] = 1;
          ramp_tau[i] = v - opt.start_time;
        }
      }
    }
    rho_sens_scaled.assign(N * kParamsPerAgent, 0.0);
    gradR.assign(M * dim, 0.0);

    pos.resize(N);
    anom.resize(N);
    pos_sens.resize(N);
    pos_prev.resize(N);
    pos_sens_prev.resize(N);
    D_prev.assign(M * N, 0.0);
    rate.assign(M, 0.0);
    g_cur.assign(M, 0.0);
    g_prev.assign(M, 0.0);
    grad_rate.assign(M * dim, 0.0);
    grad_g.assign(M * dim, 0.0);
    grad_g_prev.assign(M * dim, 0.0);
    ramp_dtau.assign(M * dim, 0.0);
    A_cur.assign(M, 0.0);
    cursors.assign(M, 0);
    p_buf.resize(N);
    d_buf.resize(N);
    miss_buf.resize(N);

    per_point_J.assign(M, 0.0);
    grad_mass.assign(dim, 0.0);
    grad_integ = ipa::GradIntegrator(dim);
    G_before.assign(dim, 0.0);
    RS.assign(dim, 0.0);
    out.min_distance.assign(M, kInf);
  }

  // Recomputes positions, rates, and gradient rates at the current state.
  // Applies pending dwell entries and detects boundary-arc exits.
  void evaluate() {
    for (std::size_t n = 0; n < N; ++n) {
      pos[n] = position(prm[n], rho[n]);
      anom[n] = anomaly_rate(prm[n], rho[n]);
      if (ipa_on) {
        ParamGrad rs;
        for (std::size_t j = 0; j < kParamsPerAgent; ++j)
          rs[j] = anom[n] * rho_sens_scaled[n * kParamsPerAgent + j];
        pos_sens[n] = ipa::position_sensitivity(prm[n], rho[n], rs);
      }
    }

    for (std::size_t i = 0; i < M; ++i) {
      const Vec2 w = cfg.points[i];
      const double A_i =
          opt.growth ? opt.growth->value(i, opt.start_time + t, cursors[i])
                     : cfg.A[i];
      A_cur[i] = A_i;

      double miss = 1.0;
      double dmin = kInf;
      for (std::size_t n = 0; n < N; ++n) {
        const double dx = pos[n].x - w.x, dy = pos[n].y - w.y;
        const double D = std::sqrt(dx * dx + dy * dy);
        d_buf[n] = D;
        const double p = detection_prob(D, cfg.r, cfg.C);
        p_buf[n] = p;
        miss *= (1.0 - p);
        dmin = std::min(dmin, D);
      }
      out.min_distance[i] = std::min(out.min_distance[i], dmin);
      const double g = A_i - cfg.B * (1.0 - miss);
      g_cur[i] = g;

      if (ipa_on) {
        // Unclamped gradient of g, kept for every point: exit reconstruction
        // needs it while the point is still parked at zero.
        double* grow = &grad_g[i * dim];
        std::fill(grow, grow + dim, 0.0);
        for (std::size_t n = 0; n < N; ++n) {
          if (d_buf[n] > cfg.r || d_buf[n] < ipa::kDistanceTol) continue;
          double miss_others = 1.0;
          for (std::size_t d = 0; d < N; ++d)
            if (d != n) miss_others *= (1.0 - p_buf[d]);
          const ParamGrad block = ipa::gradient_rate(
              pos[n], pos_sens[n], w, cfg.r, cfg.C, cfg.B, miss_others);
          for (std::size_t j = 0; j < kParamsPerAgent; ++j)
            grow[n * kParamsPerAgent + j] += block[j];
        }
      }

      const bool was_parked =
          on_boundary[i] || exit_ramp[i] || pending_entry[i];

      if (first_eval) {
        on_boundary[i] = (R[i] == 0.0 && g <= 0.0) ? 1 : 0;
      } else if (exit_ramp[i]) {
        // Growth restarted at ramp_tau inside the previous cell; install
        // R = (t - tau)/2 * g measured at the detecting evaluation. Only the
        // detection rate may enter: downstream cells grow by left-endpoint
        // frozen rates, and this rule is the unique linear one that matches
        // them at both edges of the cell, so R stays continuous (and, with
        // the interpolated d tau, C1) as the detecting cell index flips with
        // theta. If the rate has dipped negative again, R now shrinks from
        // this value and the ordinary exact-crossing hit handles it.
        exit_ramp[i] = 0;
        const double span = t - ramp_tau[i];
        const double gd = g_prev[i];
        R[i] = 0.5 * span * gd;
        // The cell we just crossed was integrated as zero, but the
        // reconstruction implies R was alive inside it. Assign the cell the
        // trapezoid of the line through the installed value: that is the
        // unique rule consistent with the neighbouring detection branch, so
        // the cost keeps matching as the detecting cell index flips.
        const double x_det = t_prev_eval - ramp_tau[i];
        const double mass = 0.5 * (t - t_prev_eval) * x_det * gd;
        per_point_J[i] += mass;
        J += mass;
        if (ipa_on) {
          double* row = &gradR[i * dim];  // zero since the preceding hit
          const double* gpr = &grad_g_prev[i * dim];
          const double* dta = &ramp_dtau[i * dim];
          const double half_res = 0.5 * (t - t_prev_eval);
          for (std::size_t j = 0; j < dim; ++j) {
            row[j] = 0.5 * (span * gpr[j] - gd * dta[j]);
            grad_mass[j] += half_res * (x_det * gpr[j] - gd * dta[j]);
          }
        }
        ramp_tau[i] = std::numeric_limits<double>::quiet_NaN();
      } else if (pending_entry[i]) {
        pending_entry[i] = 0;
        if (g <= 0.0) {
          on_boundary[i] = 1;
        } else {
          // Touch-and-go: the uncertainty resumes growing immediately, so
          // the boundary arc has zero length; log the matching exit.
          out.events.push_back({opt.start_time + t,
                                static_cast<std::uint32_t>(i),
                                EventKind::kLeaveZero, false, {}});
        }
      } else if (on_boundary[i] && g > 0.0) {
        // Boundary-arc exit detected between the previous evaluation and
        // this one: interpolate the crossing and defer the restart into a
        // one-cell ramp resolved at the next evaluation.
        double tau = t;
        const double gp = g_prev[i];
        const bool interp = gp <= 0.0 && g > gp;
        if (interp) tau = t_prev_eval + (t - t_prev_eval) * (-gp) / (g - gp);
        tau = std::clamp(tau, t_prev_eval, t);
        out.events.push_back({opt.start_time + tau,
                              static_cast<std::uint32_t>(i),
                              EventKind::kLeaveZero, false, {}});
        on_boundary[i] = 0;
        exit_ramp[i] = 1;
        ramp_tau[i] = tau;
        if (ipa_on) {
          double* dta = &ramp_dtau[i * dim];
          if (interp) {
            const double D = g - gp;
            const double f = (t - t_prev_eval) / (D * D);
            const double* gpr = &grad_g_prev[i * dim];
            const double* gcu = &grad_g[i * dim];
            for (std::size_t j = 0; j < dim; ++j)
              dta[j] = f * (gp * gcu[j] - g * gpr[j]);
          } else {
            std::fill(dta, dta + dim, 0.0);
          }
        }
      }
      rate[i] = (on_boundary[i] || exit_ramp[i]) ? 0.0 : g;
      g_prev[i] = g;

      if (ipa_on) {
        const double* grow = &grad_g[i * dim];
        double* row = &grad_rate[i * dim];
        if (on_boundary[i] || exit_ramp[i])
          std::fill(row, row + dim, 0.0);
        else
          std::copy(grow, grow + dim, row);
        std::copy(grow, grow + dim, &grad_g_prev[i * dim]);
      }

      // Sensing-range crossings: an agent's detection contribution switches
      // on or off between evaluations, but the frozen samples only see it a
      // whole cell at a time, so the accumulated cost kinks whenever the
      // crossing sweeps past an evaluation instant. Give back half the
      // switched contribution times the out-of-range portion of the cell,
      // with the crossing interpolated in distance. That matches the
      // left-endpoint frozen growth at both edges of the crossing cell, and
      // the interpolated crossing time supplies the slope term that keeps
      // the cost C1 as the crossing cell index flips with the parameters.
      // Skipped while the point sits at zero (no growth to correct there);
      // the exit machinery owns those cells.
      if (!first_eval && !was_parked) {
        const double seg = t - t_prev_eval;
        for (std::size_t n = 0; n < N && seg > 0.0; ++n) {
          const double Dp = D_prev[i * N + n];
          const double Dc = d_buf[n];
          const bool is_in = Dc < cfg.r;
          if ((Dp < cfg.r) == is_in) continue;
          const double denom = Dc - Dp;  // strictly nonzero: sides differ
          const double frac = (cfg.r - Dp) / denom;
          const double tau = t_prev_eval + seg * frac;
          const double out_span = is_in ? (tau - t_prev_eval) : (t - tau);
          // Switched contribution of agent n to the sampled rate, taken at
          // the in-range endpoint of the cell.
          double p_n, miss_others;
          if (is_in) {
            p_n = p_buf[n];
            miss_others = 1.0;
            for (std::size_t m = 0; m < N; ++m)
              if (m != n) miss_others *= (1.0 - p_buf[m]);
          } else {
            p_n = detection_prob(Dp, cfg.r, cfg.C);
            miss_others = 1.0;
            for (std::size_t m = 0; m < N; ++m)
              if (m != n)
                miss_others *=
                    (1.0 - detection_prob(D_prev[i * N + m], cfg.r, cfg.C));
          }
          const double u = cfg.B * miss_others * p_n;
          R[i] += 0.5 * u * out_span;
          if (ipa_on) {
            double* row = &gradR[i * dim];
            const ParamGrad dDp = ipa::distance_param_gradient(
                pos_prev[n], pos_sens_prev[n], w);
            const ParamGrad dDc =
                ipa::distance_param_gradient(pos[n], pos_sens[n], w);
            const double fs = seg / (denom * denom);
            const double sgn = is_in ? 1.0 : -1.0;  // d out_span = sgn * d tau
            const double D_in = is_in ? Dc : Dp;
            const double dpdD =
                ipa::detection_prob_distance_derivative(D_in, cfg.r, cfg.C);
            const ParamGrad& dDin = is_in ? dDc : dDp;
            for (std::size_t j = 0; j < kParamsPerAgent; ++j) {
              const double dtau =
                  fs * ((cfg.r - Dc) * dDp[j] - (cfg.r - Dp) * dDc[j]);
              row[n * kParamsPerAgent + j] +=
                  0.5 * (out_span * cfg.B * miss_others * dpdD * dDin[j] +
                         u * sgn * dtau);
            }
            for (std::size_t m = 0; m < N; ++m) {
              if (m == n) continue;
              const double Dm = is_in ? d_buf[m] : D_prev[i * N + m];
              const double pm = detection_prob(Dm, cfg.r, cfg.C);
              if (pm <= 0.0 || Dm < ipa::kDistanceTol) continue;
              double miss_rest = 1.0;
              for (std::size_t l = 0; l < N; ++l)
                if (l != n && l != m)
                  miss_rest *=
                      (1.0 - detection_prob(
                                 is_in ? d_buf[l] : D_prev[i * N + l],
                                 cfg.r, cfg.C));
              const ParamGrad dDm =
                  is_in ? ipa::distance_param_gradient(pos[m], pos_sens[m], w)
                        : ipa::distance_param_gradient(
                              pos_prev[m], pos_sens_prev[m], w);
              const double dpm =
                  ipa::detection_prob_distance_derivative(Dm, cfg.r, cfg.C);
              for (std::size_t j = 0; j < kParamsPerAgent; ++j)
                row[m * kParamsPerAgent + j] -=
                    0.5 * out_span * cfg.B * p_n * miss_rest * dpm * dDm[j];
            }
          }
        }
      }
      for (std::size_t n = 0; n < N; ++n) D_prev[i * N + n] = d_buf[n];
    }
    pos_prev = pos;
    if (ipa_on) pos_sens_prev = pos_sens;
    t_prev_eval = t;
    first_eval = false;
  }

  // Advances all state by h with rates frozen at the last evaluation and
  // accumulates cost (and gradient) by trapezoid, exact for frozen rates.
  void advance(double h) {
    if (h == 0.0) return;
    double S = 0.0, SR = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      S += R[i];
      SR += rate[i];
      per_point_J[i] += h * R[i] + 0.5 * h * h * rate[i];
      R[i] += h * rate[i];
      if (R[i] < 0.0) R[i] = 0.0;  // float dust only; crossings are events
    }
    J += h * S + 0.5 * h * h * SR;

    if (ipa_on) {
      std::fill(G_before.begin(), G_before.end(), 0.0);
      std::fill(RS.begin(), RS.end(), 0.0);
      for (std::size_t i = 0; i < M; ++i) {
        const double* rowR = &gradR[i * dim];
        const double* rowr = &grad_rate[i * dim];
        for (std::size_t j = 0; j < dim; ++j) {
          G_before[j] += rowR[j];
          RS[j] += rowr[j];
        }
      }
      std::vector<double>& G_after = RS;  // reuse: G_after = G_before + h*RS
      for (std::size_t j = 0; j < dim; ++j)
        G_after[j] = G_before[j] + h * RS[j];
      grad_integ.add_segment(h, G_before, G_after);
      for (std::size_t i = 0; i < M; ++i) {
        double* rowR = &gradR[i * dim];
        const double* rowr = &grad_rate[i * dim];
        for (std::size_t j = 0; j < dim; ++j) rowR[j] += h * rowr[j];
      }
    }

    for (std::size_t n = 0; n < N; ++n) {
      const double rho_old = rho[n];
      rho[n] = advance_anomaly(prm[n], rho_old, h);
      if (ipa_on) {
        // Trapezoid on d sigma/dt = (dh/dtheta)/h; the integrand is bounded
        // by 1/b, with no stiff feedback, so no substepping is needed.
        const AnomalyRateDerivs d0 = anomaly_rate_derivs(prm[n], rho_old);
        const AnomalyRateDerivs d1 = anomaly_rate_derivs(prm[n], rho[n]);
        const double h0 = anomaly_rate(prm[n], rho_old);
        const double h1 = anomaly_rate(prm[n], rho[n]);
        double* sg = &rho_sens_scaled[n * kParamsPerAgent];
        sg[kA] += 0.5 * h * (d0.d_a / h0 + d1.d_a / h1);
        sg[kB] += 0.5 * h * (d0.d_b / h0 + d1.d_b / h1);
      }
    }
    t += h;
  }

  void process_hit(std::size_t i) {
    const double rate_minus = rate[i];
    const bool grazing = std::abs(rate_minus) < ipa::kSingularityTol;
    EventRecord ev;
    ev.t = opt.start_time + t;
    ev.point = static_cast<std::uint32_t>(i);
    ev.kind = EventKind::kHitZero;
    ev.grazing = grazing;
    if (grazing) {
      ++out.grazing_warnings;  // gradient row left untouched for this event
    } else if (ipa_on) {
      if (opt.record_event_gradients) {
        std::vector<double> row(&gradR[i * dim], &gradR[i * dim] + dim);
        if (auto gt = ipa::event_time_gradient(row, rate_minus))
          ev.grad_tau = std::move(*gt);
      }
      for (std::size_t j = 0; j < dim; ++j) gradR[i * dim + j] = 0.0;
    }
    out.events.push_back(std::move(ev));
    R[i] = 0.0;
    // The point dwells at zero for the rest of the cell under the frozen
    // (negative) growth-arc rate; its gradient row stops evolving with it.
    rate[i] = 0.0;
    if (ipa_on) std::fill(&grad_rate[i * dim], &grad_rate[i * dim] + dim, 0.0);
    pending_entry[i] = 1;
  }

  void check_finite() const {
    for (std::size_t i = 0; i < M; ++i)
      if (!std::isfinite(R[i]))
        throw NumericalError("non-finite uncertainty" + at_time(t) +
                             ", point " + std::to_string(i));
    for (std::size_t n = 0; n < N; ++n)
      if (!std::isfinite(rho[n]))
        throw NumericalError("non-finite anomaly" + at_time(t) + ", agent " +
                             std::to_string(n));
  }

  void push_trace() {
    TraceRow row;
    row.t = opt.start_time + t;
    row.agents.assign(pos.begin(), pos.end());
    double S = 0.0;
    for (double v : R) S += v;
    row.sum_R = S;
    out.trace.push_back(std::move(row));
  }

  SimOutcome run() {
    const double T = cfg.T;
    const double time_eps = opt.dt * 1e-9;
    const std::size_t iter_cap = 16 * M + 64;
    std::size_t cell = 0;

    while (t < T - time_eps) {
      const double cell_end = std::min(t + opt.dt, T);
      evaluate();
      if (opt.trace_stride && cell % opt.trace_stride == 0) push_trace();

      std::size_t iters = 0;
      while (true) {
        const double h_rem = cell_end - t;
        // earliest uncertainty zero-crossing under frozen rates
        double best = kInf;
        for (std::size_t i = 0; i < M; ++i) {
          if (on_boundary[i] || rate[i] >= 0.0) continue;
          const double ch = R[i] / (-rate[i]);
          if (ch < best) best = ch;
        }
        if (best <= h_rem) {
          if (++iters > iter_cap)
            throw NumericalError("event iteration cap exceeded" + at_time(t));
          // gather ties before the state moves
          std::vector<std::size_t> hits;
          for (std::size_t i = 0; i < M; ++i) {
            if (on_boundary[i] || rate[i] >= 0.0) continue;
            if (R[i] / (-rate[i]) <= best) hits.push_back(i);
          }
          advance(best);
          // Rates stay frozen for the rest of the cell: re-freezing here
          // would anchor the other points' dynamics to the theta-dependent
          // event time and break the exactness of the gradient rows.
          for (std::size_t i : hits) process_hit(i);
          if (cell_end - t <= time_eps) break;
          continue;
        }
        advance(h_rem);
        break;
      }
      check_finite();
      ++cell;
    }

    // Final evaluation closes coverage tracking and the trace at t = T.
    t = T;
    evaluate();
    if (opt.trace_stride) push_trace();

    std::stable_sort(
        out.events.begin(), out.events.end(),
        [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
    out.J = J;
    out.per_point_J = std::move(per_point_J);
    if (ipa_on) {
      out.grad_J = grad_integ.total();
      for (std::size_t j = 0; j < dim; ++j) out.grad_J[j] += grad_mass[j];
    }
    std::vector<double> ramp_abs;
    for (std::size_t i = 0; i < M; ++i) {
      if (!exit_ramp[i]) continue;
      if (ramp_abs.empty())
        ramp_abs.assign(M, std::numeric_limits<double>::quiet_NaN());
      ramp_abs[i] = opt.start_time + ramp_tau[i];
    }
    out.final_state = SimState{std::move(rho), std::move(R),
                               std::move(ramp_abs)};
    return std::move(out);
  }
};

}  // namespace

SimOutcome simulate(const MissionConfig& config,
                    const std::vector<EllipseParams>& agents,
                    const SimOptions& options, IpaMode ipa_mode) {
  config.validate();
  if (agents.size() != config.agent_count)
    throw ConfigError("agents count does not match mission.agent_count");
  if (!(options.dt > 0.0)) throw ConfigError("integrator.dt must be positive");
  for (std::size_t n = 0; n < agents.size(); ++n) {
    const EllipseParams& p = agents[n];
    if (!std::isfinite(p.X) || !std::isfinite(p.Y) || !std::isfinite(p.a) ||
        !std::isfinite(p.b) || !std::isfinite(p.phi) || !std::isfinite(p.rho0))
      throw ConfigError("agents[" + std::to_string(n) + "] has non-finite parameters");
    if (!(p.a >= kMinMinorAxis) || !(p.b >= kMinMinorAxis))
      throw ConfigError("agents[" + std::to_string(n) +
                        "] axes must be at least the minimum minor axis");
  }
  if (options.growth && options.growth->point_count() != config.point_count())
    throw ConfigError("growth process point count mismatch");

  Engine eng(config, agents, options, ipa_mode == IpaMode::kOn);
  return eng.run();
}

NormalizedCost normalized_cost(const MissionConfig& config,
                               const EllipseParams& agent,
                               const SimOptions& options) {
  MissionConfig cfg = config;
  cfg.agent_count = 1;
  SimOptions opts = options;
  opts.trace_stride = 0;
  const SimOutcome sim = simulate(cfg, {agent}, opts, IpaMode::kOff);

  const std::size_t M = cfg.point_count();
  const double cell_area = cfg.L1 * cfg.L2 / static_cast<double>(M);
  NormalizedCost nc;
  for (std::size_t i = 0; i < M; ++i) {
    // Covered iff B*p exceeded A_i at some evaluation, i.e. the agent came
    // strictly inside distance r*(1 - A_i*C/B).
    const double thresh = cfg.r * (1.0 - cfg.A[i] * cfg.C / cfg.B);
    if (sim.min_distance[i] < thresh) {
      ++nc.covered;
      nc.j_restricted += sim.per_point_J[i] * cell_area;
    }
  }
  if (nc.covered == 0)
    throw DegenerateCoverageError(
        "coverage region is empty: no sample point satisfies B*p > A along "
        "the trajectory");
  nc.psi = static_cast<double>(nc.covered) * cell_area;
  nc.j_normalized = nc.j_restricted / nc.psi;
  return nc;
}

}  // namespace pmon
