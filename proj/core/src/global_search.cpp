#include "pmon/global_search.hpp"

#include <cmath>

#include "pmon/errors.hpp"
#include "pmon/rng.hpp"

namespace pmon {
namespace csc {

PiecewiseConstantGrowth::PiecewiseConstantGrowth(
    const StochasticGrowthSpec& spec, std::size_t point_count, double horizon,
    std::uint64_t seed) {
  if (!(spec.value_low > 0.0) || !(spec.value_high >= spec.value_low))
    throw ConfigError("growth value bounds must satisfy 0 < low <= high");
  if (!(spec.mean_holding > 0.0))
    throw ConfigError("growth mean_holding must be positive");
  if (!(horizon > 0.0)) throw ConfigError("growth horizon must be positive");

  offsets_.reserve(point_count + 1);
  offsets_.push_back(0);
  for (std::size_t i = 0; i < point_count; ++i) {
    auto eng = make_stream(seed, Stream::kEnvironment, i);
    std::uniform_real_distribution<double> value(spec.value_low,
                                                 spec.value_high);
    std::exponential_distribution<double> holding(1.0 / spec.mean_holding);
    double t = 0.0;
    times_.push_back(0.0);
    values_.push_back(value(eng));
    while (true) {
      t += holding(eng);
      if (t >= horizon) break;
      times_.push_back(t);
      values_.push_back(value(eng));
    }
    offsets_.push_back(times_.size());
  }
}

double PiecewiseConstantGrowth::value(std::size_t point, double t,
                                      std::uint32_t& cursor) const {
  const std::size_t lo = offsets_[point], hi = offsets_[point + 1];
  std::size_t idx = lo + cursor;
  while (idx + 1 < hi && times_[idx + 1] <= t) ++idx;
  cursor = static_cast<std::uint32_t>(idx - lo);
  return values_[idx];
}

std::size_t PiecewiseConstantGrowth::switch_count(std::size_t point) const {
  return offsets_[point + 1] - offsets_[point] - 1;
}

std::size_t comparison_count(std::size_t k) {
  if (k <= 1) return 1;
  return static_cast<std::size_t>(
      std::ceil(10.0 * std::log(static_cast<double>(k))));
}

std::vector<EllipseParams> sample_candidate(const MissionConfig& config,
                                            const CscSettings& settings,
                                            const CenterBox& box,
                                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(box.x_lo, box.x_hi);
  std::uniform_real_distribution<double> uy(box.y_lo, box.y_hi);
  std::vector<EllipseParams> agents(config.agent_count);
  for (EllipseParams& p : agents) {
    if (settings.sample_centers_only) {
      p = settings.fixed_shape;
      p.X = ux(rng);
      p.Y = uy(rng);
    } else {
      const double a_cap = 0.5 * std::min(config.L1, config.L2);
      std::uniform_real_distribution<double> ua(kMinMinorAxis, a_cap);
      p.X = ux(rng);
      p.Y = uy(rng);
      p.a = ua(rng);
      std::uniform_real_distribution<double> ub(kMinMinorAxis, p.a);
      p.b = ub(rng);
      std::uniform_real_distribution<double> uphi(0.0, 3.141592653589793);
      p.phi = uphi(rng);
      std::uniform_real_distribution<double> urho(0.0, 6.283185307179586);
      p.rho0 = urho(rng);
    }
  }
  return project_feasible(config, agents);
}

StepOutcome csc_step(std::size_t k, bool deterministic, bool crn,
                     const std::function<double(std::uint64_t)>& candidate_cost,
                     const std::function<double(std::uint64_t)>& incumbent_cost,
                     std::mt19937_64& rep_rng) {
  StepOutcome o;
  if (deterministic) {
    o.candidate_J = candidate_cost(0);
    o.incumbent_J = incumbent_cost(0);
    o.accepted = o.candidate_J < o.incumbent_J;  // ties keep the incumbent
    return o;
  }
  const std::size_t L = comparison_count(k);
  double sum_c = 0.0, sum_i = 0.0;
  std::size_t evaluated = 0;
  bool all_win = true;
  for (std::size_t rep = 0; rep < L; ++rep) {
    const std::uint64_t seed_c = rep_rng();
    const std::uint64_t seed_i = crn ? seed_c : rep_rng();
    const double jc = candidate_cost(seed_c);
    const double ji = incumbent_cost(seed_i);
    sum_c += jc;
    sum_i += ji;
    ++evaluated;
    if (!(jc < ji)) {  // one loss (or tie) rejects the candidate
      all_win = false;
      break;
    }
  }
  o.accepted = all_win;
  o.candidate_J = sum_c / static_cast<double>(evaluated);
  o.incumbent_J = sum_i / static_cast<double>(evaluated);
  return o;
}

CscResult run_search(const MissionConfig& config,
                     const std::vector<EllipseParams>& init,
                     const CscSettings& settings, const SimOptions& options,
                     const CenterBox* box) {
  if (settings.trials == 0) throw ConfigError("csc.trials must be >= 1");
  if (!settings.deterministic && !(settings.growth.value_high < config.B))
    throw ConfigError("csc.growth.value_high must stay below mission.B");

  const CenterBox full{0.0, config.L1, 0.0, config.L2};
  const CenterBox& sample_box = box ? *box : full;
  auto sampler_rng = make_stream(settings.master_seed, Stream::kSampler);
  auto rep_rng = make_stream(settings.master_seed, Stream::kComparisons);

  const std::size_t M = config.point_count();

  // Cost of one parameter set under one environment realization (the seed is
  // ignored in deterministic mode).
  auto realized_cost = [&](const std::vector<EllipseParams>& params,
                           std::uint64_t env_seed) {
    SimOptions opts = options;
    if (settings.deterministic) {
      opts.growth = nullptr;
      return simulate(config, params, opts, IpaMode::kOff).J;
    }
    PiecewiseConstantGrowth growth(settings.growth, M, config.T, env_seed);
    opts.growth = &growth;
    return simulate(config, params, opts, IpaMode::kOff).J;
  };

  // Refinement runs against a fixed realization (index = trial) so the inner
  // descent sees a deterministic objective.
  auto refine = [&](const std::vector<EllipseParams>& params,
                    std::uint64_t trial, const DescentSettings& ds) {
    SimOptions opts = options;
    std::unique_ptr<PiecewiseConstantGrowth> growth;
    if (settings.deterministic) {
      opts.growth = nullptr;
    } else {
      growth = std::make_unique<PiecewiseConstantGrowth>(
          settings.growth, M, config.T,
          derive_seed(settings.master_seed, Stream::kEnvironment, trial));
      opts.growth = growth.get();
    }
    return optimize(config, params, ds, opts);
  };

  CscResult res;
  res.params = project_feasible(config, init);
  if (settings.refine) {
    DescentResult inc = refine(res.params, 0, settings.incumbent_refine);
    res.params = std::move(inc.params);
    res.J = inc.J;
  } else {
    res.J = realized_cost(res.params,
                          derive_seed(settings.master_seed,
                                      Stream::kEnvironment, 0));
  }

  res.history.reserve(settings.trials);
  for (std::size_t k = 1; k <= settings.trials; ++k) {
    std::vector<EllipseParams> cand =
        sample_candidate(config, settings, sample_box, sampler_rng);
    double cand_refined_J;
    if (settings.refine) {
      DescentResult dr = refine(cand, k, settings.candidate_refine);
      cand = std::move(dr.params);
      cand_refined_J = dr.J;
    } else {
      cand_refined_J = realized_cost(
          cand, derive_seed(settings.master_seed, Stream::kEnvironment, k));
    }

    const double inc_cached = res.J;
    std::function<double(std::uint64_t)> cand_cost, inc_cost;
    if (settings.deterministic) {
      cand_cost = [&](std::uint64_t) { return cand_refined_J; };
      inc_cost = [&](std::uint64_t) { return inc_cached; };
    } else {
      cand_cost = [&](std::uint64_t s) { return realized_cost(cand, s); };
      inc_cost = [&](std::uint64_t s) { return realized_cost(res.params, s); };
    }

    const StepOutcome step = csc_step(k, settings.deterministic, settings.crn,
                                      cand_cost, inc_cost, rep_rng);
    res.history.push_back({k, step.accepted, step.candidate_J, inc_cached});
    if (step.accepted) {
      res.params = std::move(cand);
      res.J = cand_refined_J;
    }
  }
  return res;
}

}  // namespace csc
}  // namespace pmon
