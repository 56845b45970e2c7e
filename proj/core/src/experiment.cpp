#include "pmon/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pmon/errors.hpp"
#include "pmon/manifest.hpp"
#include "pmon/rng.hpp"

namespace pmon {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// %.17g round-trips doubles exactly, keeping CSV bytes reproducible.
std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

[[noreturn]] void type_error(const std::string& key, const char* want) {
  throw ConfigError(key + ": expected " + want);
}

void read_value(const json& v, const std::string& key, double& out) {
  if (!v.is_number()) type_error(key, "a number");
  out = v.get<double>();
}

void read_value(const json& v, const std::string& key, bool& out) {
  if (!v.is_boolean()) type_error(key, "a boolean");
  out = v.get<bool>();
}

void read_value(const json& v, const std::string& key, std::string& out) {
  if (!v.is_string()) type_error(key, "a string");
  out = v.get<std::string>();
}

void read_value(const json& v, const std::string& key, std::uint64_t& out) {
  const bool ok = v.is_number_unsigned() ||
                  (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (!ok) type_error(key, "a nonnegative integer");
  out = v.get<std::uint64_t>();
}

void read_value(const json& v, const std::string& key, std::uint32_t& out) {
  std::uint64_t wide = 0;
  read_value(v, key, wide);
  if (wide > 0xffffffffULL) throw ConfigError(key + ": value out of range");
  out = static_cast<std::uint32_t>(wide);
}

void read_value(const json& v, const std::string& key,
                std::vector<double>& out) {
  if (!v.is_array()) type_error(key, "an array of numbers");
  out.clear();
  for (const json& e : v) {
    double d = 0.0;
    read_value(e, key, d);
    out.push_back(d);
  }
}

// One JSON object with every accepted key accounted for; finish() rejects
// leftovers so config typos fail loudly instead of silently defaulting.
class Block {
 public:
  Block(const json& node, std::string prefix)
      : node_(node), prefix_(std::move(prefix)) {
    if (!node_.is_object()) throw ConfigError(prefix_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    if (const json* v = take(key)) read_value(*v, path(key), out);
  }

  const json* take(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return prefix_ + "." + key; }

  void finish() const {
    for (const auto& item : node_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError("unknown key " + prefix_ + "." + item.key());
      }
    }
  }

 private:
  const json& node_;
  std::string prefix_;
  std::unordered_set<std::string> seen_;
};

EllipseParams parse_agent(const json& v, const std::string& prefix) {
  Block b(v, prefix);
  EllipseParams p;
  b.get("X", p.X);
  b.get("Y", p.Y);
  b.get("a", p.a);
  b.get("b", p.b);
  b.get("phi", p.phi);
  b.get("rho0", p.rho0);
  b.finish();
  return p;
}

void parse_shape(const json& v, EllipseParams& shape) {
  Block b(v, "csc.shape");
  b.get("a", shape.a);
  b.get("b", shape.b);
  b.get("phi", shape.phi);
  b.get("rho0", shape.rho0);
  b.finish();
}

void parse_descent(const json& v, const std::string& prefix,
                   DescentSettings& s) {
  Block b(v, prefix);
  if (const json* rule = b.take("step_rule")) {
    const std::string name = rule->get<std::string>();
    if (name == "constant")
      s.step_rule = StepRule::kConstant;
    else if (name == "backtracking")
      s.step_rule = StepRule::kBacktracking;
    else
      throw ConfigError(prefix +
                        ".step_rule must be \"constant\" or \"backtracking\"");
  }
  b.get("eta0", s.eta0);
  b.get("epsilon", s.epsilon);
  b.get("max_iters", s.max_iters);
  b.get("shrink", s.shrink);
  b.get("expand", s.expand);
  b.get("max_halvings", s.max_halvings);
  b.finish();
}

void parse_mission(const json& v, MissionBlock& m) {
  Block b(v, "mission");
  b.get("L1", m.L1);
  b.get("L2", m.L2);
  b.get("r", m.r);
  b.get("B", m.B);
  b.get("C", m.C);
  b.get("T", m.T);
  b.get("agents", m.agents);
  if (const json* p = b.take("points")) {
    if (p->is_string()) {
      if (p->get<std::string>() != "lattice") {
        throw ConfigError(
            "mission.points: expected \"lattice\" or an array of [x, y]");
      }
      m.lattice = true;
      m.points.clear();
    } else if (p->is_array()) {
      m.lattice = false;
      m.points.clear();
      for (const json& e : *p) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
            !e[1].is_number()) {
          throw ConfigError("mission.points: expected [x, y] pairs");
        }
        m.points.push_back({e[0].get<double>(), e[1].get<double>()});
      }
    } else {
      throw ConfigError(
          "mission.points: expected \"lattice\" or an array of [x, y]");
    }
  }
  if (const json* a = b.take("A")) {
    if (a->is_number()) {
      m.A = {a->get<double>()};
    } else {
      read_value(*a, "mission.A", m.A);
    }
  }
  if (const json* r0 = b.take("R0")) {
    if (r0->is_number()) {
      m.R0 = {r0->get<double>()};
    } else {
      read_value(*r0, "mission.R0", m.R0);
    }
  }
  b.finish();
}

void parse_integrator(const json& v, IntegratorBlock& i) {
  Block b(v, "integrator");
  b.get("dt", i.dt);
  b.get("event_tol_factor", i.event_tol_factor);
  b.get("trace_stride", i.trace_stride);
  b.get("ipa", i.ipa);
  b.finish();
}

void parse_environment(const json& v, EnvironmentBlock& e) {
  Block b(v, "environment");
  b.get("stochastic", e.stochastic);
  b.get("low", e.growth.value_low);
  b.get("high", e.growth.value_high);
  b.get("mean_hold", e.growth.mean_holding);
  b.finish();
}

void parse_csc(const json& v, ExperimentConfig& c) {
  Block b(v, "csc");
  b.get("trials", c.csc.trials);
  b.get("refine", c.csc.refine);
  b.get("sample_centers_only", c.csc.sample_centers_only);
  b.get("crn", c.csc.crn);
  if (const json* s = b.take("shape")) parse_shape(*s, c.csc.fixed_shape);
  if (const json* r = b.take("incumbent_refine")) {
    parse_descent(*r, "csc.incumbent_refine", c.csc.incumbent_refine);
  }
  if (const json* r = b.take("candidate_refine")) {
    parse_descent(*r, "csc.candidate_refine", c.csc.candidate_refine);
  }
  if (const json* box = b.take("box")) {
    std::vector<double> vals;
    read_value(*box, "csc.box", vals);
    if (vals.size() != 4) {
      throw ConfigError("csc.box: expected [x_lo, x_hi, y_lo, y_hi]");
    }
    c.csc_box = csc::CenterBox{vals[0], vals[1], vals[2], vals[3]};
  }
  b.finish();
}

void parse_tpbvp(const json& v, TpbvpBlock& t) {
  Block b(v, "tpbvp");
  b.get("eta0", t.settings.eta0);
  b.get("epsilon", t.settings.epsilon);
  b.get("max_iters", t.settings.max_iters);
  b.get("shrink", t.settings.shrink);
  b.get("expand", t.settings.expand);
  b.get("max_halvings", t.settings.max_halvings);
  b.get("schedule_dt", t.schedule_dt);
  b.finish();
}

void parse_compare(const json& v, CompareBlock& c) {
  Block b(v, "compare");
  b.get("b_values", c.b_values);
  b.finish();
}

void parse_gradcheck(const json& v, GradCheckBlock& g) {
  Block b(v, "gradcheck");
  b.get("step", g.step);
  b.get("rel_tol", g.rel_tol);
  b.get("abs_tol", g.abs_tol);
  b.finish();
}

void parse_output(const json& v, OutputBlock& o) {
  Block b(v, "output");
  b.get("dir", o.dir);
  b.get("write_trace", o.write_trace);
  b.get("write_events", o.write_events);
  b.finish();
}

ExperimentConfig parse_config_doc(const json& doc) {
  ExperimentConfig c;
  Block b(doc, "config");
  if (const json* m = b.take("mode")) {
    std::string name;
    read_value(*m, "config.mode", name);
    c.mode = mode_from_name(name);
  }
  b.get("seed", c.seed);
  const json* mission = b.take("mission");
  if (!mission) throw ConfigError("config: missing required mission block");
  parse_mission(*mission, c.mission);
  if (const json* a = b.take("agents")) {
    if (a->is_string()) {
      if (a->get<std::string>() != "sample") {
        throw ConfigError("agents: expected \"sample\" or an array");
      }
      c.sample_agents = true;
      c.agents.clear();
    } else if (a->is_array()) {
      c.sample_agents = false;
      c.agents.clear();
      std::size_t idx = 0;
      for (const json& e : *a) {
        c.agents.push_back(parse_agent(e, "agents." + std::to_string(idx)));
        ++idx;
      }
    } else {
      throw ConfigError("agents: expected \"sample\" or an array");
    }
  }
  if (const json* v = b.take("integrator")) parse_integrator(*v, c.integrator);
  if (const json* v = b.take("environment")) {
    parse_environment(*v, c.environment);
  }
  if (const json* v = b.take("optimizer")) {
    parse_descent(*v, "optimizer", c.optimizer);
  }
  if (const json* v = b.take("csc")) parse_csc(*v, c);
  if (const json* v = b.take("tpbvp")) parse_tpbvp(*v, c.tpbvp);
  if (const json* v = b.take("compare")) parse_compare(*v, c.compare);
  if (const json* v = b.take("gradcheck")) parse_gradcheck(*v, c.gradcheck);
  if (const json* v = b.take("output")) parse_output(*v, c.output);
  b.finish();
  return c;
}

json agent_json(const EllipseParams& p) {
  return json{{"X", p.X},     {"Y", p.Y},     {"a", p.a},
              {"b", p.b},     {"phi", p.phi}, {"rho0", p.rho0}};
}

json agents_json(const std::vector<EllipseParams>& agents) {
  json arr = json::array();
  for (const EllipseParams& p : agents) arr.push_back(agent_json(p));
  return arr;
}

json descent_json(const DescentSettings& s) {
  return json{{"step_rule", s.step_rule == StepRule::kConstant
                                ? "constant"
                                : "backtracking"},
              {"eta0", s.eta0},     {"epsilon", s.epsilon},
              {"max_iters", s.max_iters}, {"shrink", s.shrink},
              {"expand", s.expand}, {"max_halvings", s.max_halvings}};
}

json config_doc(const ExperimentConfig& c) {
  json doc;
  doc["mode"] = to_string(c.mode);
  doc["seed"] = c.seed;

  json m;
  m["L1"] = c.mission.L1;
  m["L2"] = c.mission.L2;
  m["r"] = c.mission.r;
  m["B"] = c.mission.B;
  m["C"] = c.mission.C;
  m["T"] = c.mission.T;
  m["agents"] = c.mission.agents;
  if (c.mission.lattice) {
    m["points"] = "lattice";
  } else {
    json pts = json::array();
    for (const Vec2& p : c.mission.points) pts.push_back({p.x, p.y});
    m["points"] = std::move(pts);
  }
  m["A"] = c.mission.A.size() == 1 ? json(c.mission.A[0]) : json(c.mission.A);
  m["R0"] =
      c.mission.R0.size() == 1 ? json(c.mission.R0[0]) : json(c.mission.R0);
  doc["mission"] = std::move(m);

  doc["agents"] = c.sample_agents ? json("sample") : agents_json(c.agents);
  doc["integrator"] = json{{"dt", c.integrator.dt},
                           {"event_tol_factor", c.integrator.event_tol_factor},
                           {"trace_stride", c.integrator.trace_stride},
                           {"ipa", c.integrator.ipa}};
  doc["environment"] = json{{"stochastic", c.environment.stochastic},
                            {"low", c.environment.growth.value_low},
                            {"high", c.environment.growth.value_high},
                            {"mean_hold", c.environment.growth.mean_holding}};
  doc["optimizer"] = descent_json(c.optimizer);

  json cs;
  cs["trials"] = c.csc.trials;
  cs["refine"] = c.csc.refine;
  cs["sample_centers_only"] = c.csc.sample_centers_only;
  cs["crn"] = c.csc.crn;
  cs["shape"] = json{{"a", c.csc.fixed_shape.a},
                     {"b", c.csc.fixed_shape.b},
                     {"phi", c.csc.fixed_shape.phi},
                     {"rho0", c.csc.fixed_shape.rho0}};
  cs["incumbent_refine"] = descent_json(c.csc.incumbent_refine);
  cs["candidate_refine"] = descent_json(c.csc.candidate_refine);
  if (c.csc_box) {
    cs["box"] = {c.csc_box->x_lo, c.csc_box->x_hi, c.csc_box->y_lo,
                 c.csc_box->y_hi};
  }
  doc["csc"] = std::move(cs);

  doc["tpbvp"] = json{{"eta0", c.tpbvp.settings.eta0},
                      {"epsilon", c.tpbvp.settings.epsilon},
                      {"max_iters", c.tpbvp.settings.max_iters},
                      {"shrink", c.tpbvp.settings.shrink},
                      {"expand", c.tpbvp.settings.expand},
                      {"max_halvings", c.tpbvp.settings.max_halvings},
                      {"schedule_dt", c.tpbvp.schedule_dt}};
  doc["compare"] = json{{"b_values", c.compare.b_values}};
  doc["gradcheck"] = json{{"step", c.gradcheck.step},
                          {"rel_tol", c.gradcheck.rel_tol},
                          {"abs_tol", c.gradcheck.abs_tol}};
  doc["output"] = json{{"dir", c.output.dir},
                       {"write_trace", c.output.write_trace},
                       {"write_events", c.output.write_events}};
  return doc;
}

// ---- execution ----------------------------------------------------------

// Output sink: collects files, report lines, and the summary document, then
// closes the run with summary.json and manifest.json.
class Collector {
 public:
  explicit Collector(const ExperimentConfig& cfg)
      : cfg_(cfg), dir_(cfg.output.dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) {
      throw ConfigError("output.dir: cannot create " + dir_.string() + ": " +
                        ec.message());
    }
  }

  void write_text(const std::string& name, const std::string& text) {
    const fs::path target = dir_ / name;
    std::ofstream f(target, std::ios::binary);
    f << text;
    f.flush();
    if (!f) throw ConfigError("output: cannot write " + target.string());
    files_.push_back(name);
  }

  json& summary() { return summary_; }
  void line(std::string s) { lines_.push_back(std::move(s)); }

  RunResult finish(double headline) {
    summary_["mode"] = to_string(cfg_.mode);
    summary_["J"] = headline;
    write_text("summary.json", summary_.dump(2) + "\n");

    std::vector<ManifestEntry> entries;
    entries.reserve(files_.size());
    for (const std::string& f : files_) {
      entries.push_back({f, sha256_file((dir_ / f).string())});
    }
    // The embedded config identifies the experiment, not its location: the
    // directory is normalized so reruns elsewhere produce identical bytes.
    ExperimentConfig portable = cfg_;
    portable.output.dir = OutputBlock{}.dir;
    const fs::path mpath = dir_ / "manifest.json";
    std::ofstream mf(mpath, std::ios::binary);
    mf << manifest_text(serialize_config(portable), cfg_.seed, entries);
    mf.flush();
    if (!mf) throw ConfigError("output: cannot write " + mpath.string());

    RunResult r;
    r.J = headline;
    r.lines = std::move(lines_);
    r.outputs = std::move(files_);
    r.outputs.push_back("manifest.json");
    return r;
  }

 private:
  const ExperimentConfig& cfg_;
  fs::path dir_;
  std::vector<std::string> files_;
  std::vector<std::string> lines_;
  json summary_;
};

struct OwnedOptions {
  SimOptions opt;
  std::unique_ptr<csc::PiecewiseConstantGrowth> growth;
};

SimOptions integrator_options(const ExperimentConfig& c) {
  SimOptions o;
  o.dt = c.integrator.dt;
  o.event_tol_factor = c.integrator.event_tol_factor;
  return o;
}

// Options plus, in a stochastic environment, the growth realization drawn
// from the environment stream of the master seed.
OwnedOptions make_options(const ExperimentConfig& c, const MissionConfig& m,
                          bool with_trace) {
  OwnedOptions o;
  o.opt = integrator_options(c);
  if (with_trace) o.opt.trace_stride = c.integrator.trace_stride;
  if (c.environment.stochastic) {
    o.growth = std::make_unique<csc::PiecewiseConstantGrowth>(
        c.environment.growth, m.point_count(), m.T,
        derive_seed(c.seed, Stream::kEnvironment, 0));
    o.opt.growth = o.growth.get();
  }
  return o;
}

std::vector<EllipseParams> resolve_agents(const ExperimentConfig& c,
                                          const MissionConfig& m) {
  const std::size_t n = m.agent_count;
  if (!c.sample_agents && !c.agents.empty()) {
    if (c.agents.size() != n) {
      throw ConfigError("agents: expected " + std::to_string(n) +
                        " entries, got " + std::to_string(c.agents.size()));
    }
    return c.agents;
  }
  if (n == 0) return {};
  if (c.sample_agents) {
    csc::CscSettings s;
    s.sample_centers_only = false;
    const csc::CenterBox box{0.0, m.L1, 0.0, m.L2};
    std::mt19937_64 rng = make_stream(c.seed, Stream::kSampler, 0);
    return csc::sample_candidate(m, s, box, rng);
  }
  // Default layout: the csc shape, centers spread along the midline.
  std::vector<EllipseParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    EllipseParams p = c.csc.fixed_shape;
    p.X = m.L1 * static_cast<double>(i + 1) / static_cast<double>(n + 1);
    p.Y = m.L2 / 2.0;
    out.push_back(p);
  }
  return project_feasible(m, out);
}

const char* event_kind_name(EventKind kind) {
  return kind == EventKind::kHitZero ? "hit" : "leave";
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  const std::size_t n = trace.empty() ? 0 : trace.front().agents.size();
  os << "t";
  for (std::size_t i = 0; i < n; ++i) os << ",x" << i << ",y" << i;
  os << ",sum_R\n";
  for (const TraceRow& row : trace) {
    os << g17(row.t);
    for (const Vec2& p : row.agents) os << ',' << g17(p.x) << ',' << g17(p.y);
    os << ',' << g17(row.sum_R) << '\n';
  }
  return os.str();
}

std::string events_csv(const std::vector<EventRecord>& events) {
  std::ostringstream os;
  os << "t,point,kind,grazing\n";
  for (const EventRecord& e : events) {
    os << g17(e.t) << ',' << e.point << ',' << event_kind_name(e.kind) << ','
       << (e.grazing ? 1 : 0) << '\n';
  }
  return os.str();
}

const char* descent_status_name(DescentStatus s) {
  return s == DescentStatus::kConverged ? "converged" : "iteration-cap";
}

const char* tpbvp_status_name(tpbvp::TpbvpStatus s) {
  return s == tpbvp::TpbvpStatus::kConverged ? "converged" : "iteration-cap";
}

RunResult run_simulate(const ExperimentConfig& c, const MissionConfig& m,
                       Collector& out) {
  OwnedOptions o = make_options(c, m, /*with_trace=*/true);
  const std::vector<EllipseParams> agents = resolve_agents(c, m);
  const SimOutcome sim = simulate(
      m, agents, o.opt, c.integrator.ipa ? IpaMode::kOn : IpaMode::kOff);

  if (c.output.write_trace && !sim.trace.empty()) {
    out.write_text("trace.csv", trace_csv(sim.trace));
  }
  if (c.output.write_events) {
    out.write_text("events.csv", events_csv(sim.events));
  }

  const double final_sum =
      std::accumulate(sim.final_state.R.begin(), sim.final_state.R.end(), 0.0);
  out.summary()["events"] = sim.events.size();
  out.summary()["grazing_warnings"] = sim.grazing_warnings;
  out.summary()["final_sum_R"] = final_sum;
  out.summary()["agents"] = agents_json(agents);
  if (!sim.grad_J.empty()) out.summary()["grad_J"] = sim.grad_J;

  out.line("J = " + g17(sim.J));
  out.line("events = " + std::to_string(sim.events.size()));
  if (sim.grazing_warnings > 0) {
    out.line("grazing warnings = " + std::to_string(sim.grazing_warnings));
  }
  return out.finish(sim.J);
}

constexpr const char* kParamNames[kParamsPerAgent] = {"X", "Y", "a", "b",
                                                      "phi"};

RunResult run_gradcheck(const ExperimentConfig& c, const MissionConfig& m,
                        Collector& out) {
  OwnedOptions o = make_options(c, m, /*with_trace=*/false);
  const std::vector<EllipseParams> agents = resolve_agents(c, m);
  if (agents.empty()) {
    throw ConfigError("grad-check: mission.agents must be at least 1");
  }
  const SimOutcome base = simulate(m, agents, o.opt, IpaMode::kOn);
  const std::vector<double> packed = pack_params(agents);
  const double h = c.gradcheck.step;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::ostringstream csv;
  csv << "agent,param,ipa,fd,abs_err,rel_err,status\n";
  std::size_t failed = 0;
  std::size_t skipped = 0;
  double max_rel = 0.0;
  double max_abs = 0.0;
  for (std::size_t cix = 0; cix < packed.size(); ++cix) {
    const std::size_t agent = cix / kParamsPerAgent;
    const std::size_t comp = cix % kParamsPerAgent;
    const double ipa_val = base.grad_J[cix];
    // Central differences on an axis component must stay above the floor.
    const bool axis = comp == kA || comp == kB;
    if (axis && packed[cix] - h < kMinMinorAxis) {
      csv << agent << ',' << kParamNames[comp] << ',' << g17(ipa_val) << ','
          << g17(nan) << ',' << g17(nan) << ',' << g17(nan) << ",skipped\n";
      ++skipped;
      continue;
    }
    std::vector<double> shifted = packed;
    shifted[cix] = packed[cix] + h;
    const double j_plus =
        simulate(m, unpack_params(shifted, agents), o.opt, IpaMode::kOff).J;
    shifted[cix] = packed[cix] - h;
    const double j_minus =
        simulate(m, unpack_params(shifted, agents), o.opt, IpaMode::kOff).J;
    const double fd = (j_plus - j_minus) / (2.0 * h);
    const double abs_err = std::abs(ipa_val - fd);
    const double denom = std::max(std::abs(ipa_val), std::abs(fd));
    const double rel_err = denom > 0.0 ? abs_err / denom : 0.0;
    const bool ok =
        abs_err <= c.gradcheck.abs_tol || rel_err <= c.gradcheck.rel_tol;
    if (!ok) ++failed;
    max_rel = std::max(max_rel, rel_err);
    max_abs = std::max(max_abs, abs_err);
    csv << agent << ',' << kParamNames[comp] << ',' << g17(ipa_val) << ','
        << g17(fd) << ',' << g17(abs_err) << ',' << g17(rel_err) << ','
        << (ok ? "ok" : "fail") << '\n';
    out.line(std::string("agent ") + std::to_string(agent) + " " +
             kParamNames[comp] + ": ipa=" + g17(ipa_val) + " fd=" + g17(fd) +
             " rel=" + g17(rel_err) + (ok ? "" : "  <-- flagged"));
  }
  out.write_text("gradcheck.csv", csv.str());

  out.summary()["components"] = packed.size();
  out.summary()["failed"] = failed;
  out.summary()["skipped"] = skipped;
  out.summary()["max_rel_err"] = max_rel;
  out.summary()["max_abs_err"] = max_abs;
  out.summary()["grazing_warnings"] = base.grazing_warnings;
  out.summary()["all_ok"] = failed == 0;

  out.line(failed == 0
               ? "grad-check: all evaluated components within tolerance"
               : "grad-check: " + std::to_string(failed) +
                     " component(s) flagged");
  return out.finish(base.J);
}

RunResult run_optimize(const ExperimentConfig& c, const MissionConfig& m,
                       Collector& out) {
  OwnedOptions o = make_options(c, m, /*with_trace=*/false);
  const std::vector<EllipseParams> init =
      project_feasible(m, resolve_agents(c, m));
  const DescentResult res = optimize(m, init, c.optimizer, o.opt);

  std::ostringstream csv;
  csv << "iter,J,grad_norm,step\n";
  for (const DescentIterate& it : res.trace) {
    csv << it.iter << ',' << g17(it.J) << ',' << g17(it.grad_norm) << ','
        << g17(it.step) << '\n';
  }
  out.write_text("descent_trace.csv", csv.str());

  out.summary()["status"] = descent_status_name(res.status);
  out.summary()["iterations"] = res.trace.empty() ? 0 : res.trace.size() - 1;
  out.summary()["cost_evaluations"] = res.cost_evaluations;
  out.summary()["gradient_evaluations"] = res.gradient_evaluations;
  out.summary()["init"] = agents_json(init);
  out.summary()["params"] = agents_json(res.params);

  out.line("J = " + g17(res.J));
  out.line(std::string("status = ") + descent_status_name(res.status));
  out.line("iterations = " +
           std::to_string(res.trace.empty() ? 0 : res.trace.size() - 1));
  return out.finish(res.J);
}

RunResult run_csc(const ExperimentConfig& c, const MissionConfig& m,
                  Collector& out) {
  csc::CscSettings settings = c.csc;
  settings.deterministic = !c.environment.stochastic;
  settings.growth = c.environment.growth;
  settings.master_seed = c.seed;

  const std::vector<EllipseParams> init = resolve_agents(c, m);
  const SimOptions opt = integrator_options(c);
  const csc::CenterBox* box = c.csc_box ? &*c.csc_box : nullptr;
  const csc::CscResult res = csc::run_search(m, init, settings, opt, box);

  std::ostringstream csv;
  csv << "k,accepted,candidate_J,incumbent_J,best_so_far\n";
  std::size_t accepted = 0;
  for (const csc::CscTrial& t : res.history) {
    const double best = t.accepted ? t.candidate_J : t.incumbent_J;
    if (t.accepted) ++accepted;
    csv << t.k << ',' << (t.accepted ? 1 : 0) << ',' << g17(t.candidate_J)
        << ',' << g17(t.incumbent_J) << ',' << g17(best) << '\n';
  }
  out.write_text("csc_history.csv", csv.str());

  out.summary()["trials"] = res.history.size();
  out.summary()["accepted"] = accepted;
  out.summary()["params"] = agents_json(res.params);
  out.summary()["deterministic"] = settings.deterministic;

  out.line("J = " + g17(res.J));
  out.line("accepted = " + std::to_string(accepted) + "/" +
           std::to_string(res.history.size()));
  return out.finish(res.J);
}

RunResult run_tpbvp(const ExperimentConfig& c, const MissionConfig& m,
                    Collector& out) {
  OwnedOptions o = make_options(c, m, /*with_trace=*/false);
  const std::vector<EllipseParams> agents = resolve_agents(c, m);
  if (agents.empty()) {
    throw ConfigError("tpbvp: mission.agents must be at least 1");
  }
  const double sched_dt =
      c.tpbvp.schedule_dt > 0.0 ? c.tpbvp.schedule_dt : c.integrator.dt;
  const double ellipse_J = simulate(m, agents, o.opt, IpaMode::kOff).J;
  const tpbvp::ControlSchedule init = tpbvp::ellipse_schedule(m, agents,
                                                              sched_dt);
  const tpbvp::TpbvpResult res =
      tpbvp::solve(m, init, c.tpbvp.settings, o.opt);

  std::ostringstream csv;
  csv << "iter,J\n";
  for (std::size_t i = 0; i < res.J_history.size(); ++i) {
    csv << i << ',' << g17(res.J_history[i]) << '\n';
  }
  out.write_text("tpbvp_history.csv", csv.str());

  if (c.output.write_trace) {
    std::ostringstream sched;
    sched << "step,t";
    for (std::size_t n = 0; n < res.schedule.agent_count(); ++n) {
      sched << ",theta" << n;
    }
    sched << '\n';
    for (std::size_t j = 0; j < res.schedule.step_count(); ++j) {
      sched << j << ',' << g17(static_cast<double>(j) * res.schedule.dt);
      for (std::size_t n = 0; n < res.schedule.agent_count(); ++n) {
        sched << ',' << g17(res.schedule.theta[n][j]);
      }
      sched << '\n';
    }
    out.write_text("schedule.csv", sched.str());
  }

  json starts = json::array();
  for (const Vec2& s : res.schedule.start) starts.push_back({s.x, s.y});
  out.summary()["status"] = tpbvp_status_name(res.status);
  out.summary()["iterations"] = res.J_history.size();
  out.summary()["ellipse_J"] = ellipse_J;
  out.summary()["schedule_dt"] = res.schedule.dt;
  out.summary()["start"] = std::move(starts);

  out.line("J = " + g17(res.J));
  out.line("ellipse J = " + g17(ellipse_J));
  out.line(std::string("status = ") + tpbvp_status_name(res.status));
  return out.finish(res.J);
}

RunResult run_compare(const ExperimentConfig& c, const MissionConfig& m,
                      Collector& out) {
  if (m.agent_count != 1) {
    throw ConfigError("compare-lin-ellipse: mission.agents must be 1");
  }
  if (c.environment.stochastic) {
    throw ConfigError(
        "compare-lin-ellipse: requires the deterministic environment");
  }
  const SimOptions opt = integrator_options(c);
  const EllipseParams tmpl = resolve_agents(c, m).at(0);

  std::vector<double> bs;
  bs.push_back(kMinMinorAxis);
  for (double b : c.compare.b_values) bs.push_back(b);

  std::ostringstream csv;
  csv << "b,J_normalized,Psi,covered,J_restricted\n";
  double base_cost = 0.0;
  double best_cost = std::numeric_limits<double>::infinity();
  double best_b = bs.front();
  for (std::size_t i = 0; i < bs.size(); ++i) {
    EllipseParams p = tmpl;
    p.b = bs[i];
    const NormalizedCost nc = normalized_cost(m, p, opt);
    if (i == 0) base_cost = nc.j_normalized;
    if (nc.j_normalized < best_cost) {
      best_cost = nc.j_normalized;
      best_b = bs[i];
    }
    csv << g17(bs[i]) << ',' << g17(nc.j_normalized) << ',' << g17(nc.psi)
        << ',' << nc.covered << ',' << g17(nc.j_restricted) << '\n';
    out.line("b=" + g17(bs[i]) + ": J_norm=" + g17(nc.j_normalized) +
             " Psi=" + g17(nc.psi));
  }
  out.write_text("compare.csv", csv.str());

  const bool wins = best_b > bs.front() && best_cost < base_cost;
  out.summary()["verdict"] = wins ? "ellipse wins" : "inconclusive";
  out.summary()["J_normalized_linear"] = base_cost;
  out.summary()["best_b"] = best_b;
  out.summary()["best_J_normalized"] = best_cost;

  out.line(std::string("verdict: ") +
           (wins ? "ellipse wins (b=" + g17(best_b) + ": " + g17(best_cost) +
                       " < " + g17(base_cost) + ")"
                 : "inconclusive"));
  return out.finish(best_cost);
}

}  // namespace

std::string to_string(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::kSimulate:
      return "simulate";
    case ExperimentMode::kOptimize:
      return "optimize";
    case ExperimentMode::kCsc:
      return "csc";
    case ExperimentMode::kTpbvp:
      return "tpbvp";
    case ExperimentMode::kCompare:
      return "compare-lin-ellipse";
    case ExperimentMode::kGradCheck:
      return "grad-check";
  }
  return "simulate";
}

ExperimentMode mode_from_name(const std::string& name) {
  if (name == "simulate") return ExperimentMode::kSimulate;
  if (name == "optimize") return ExperimentMode::kOptimize;
  if (name == "csc") return ExperimentMode::kCsc;
  if (name == "tpbvp") return ExperimentMode::kTpbvp;
  if (name == "compare-lin-ellipse") return ExperimentMode::kCompare;
  if (name == "grad-check") return ExperimentMode::kGradCheck;
  throw ConfigError("mode: unknown mode \"" + name + "\"");
}

MissionConfig MissionBlock::build() const {
  MissionConfig m;
  m.L1 = L1;
  m.L2 = L2;
  m.r = r;
  m.B = B;
  m.C = C;
  m.T = T;
  m.agent_count = agents;
  m.points = lattice ? lattice_grid(L1, L2) : points;
  const std::size_t count = m.points.size();
  if (A.size() == 1) {
    m.A.assign(count, A[0]);
  } else {
    if (A.size() != count) {
      throw ConfigError("mission.A: expected 1 or " + std::to_string(count) +
                        " values, got " + std::to_string(A.size()));
    }
    m.A = A;
  }
  if (R0.size() == 1) {
    m.R0.assign(count, R0[0]);
  } else {
    if (R0.size() != count) {
      throw ConfigError("mission.R0: expected 1 or " + std::to_string(count) +
                        " values, got " + std::to_string(R0.size()));
    }
    m.R0 = R0;
  }
  m.validate();
  return m;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return parse_config_doc(doc);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void apply_override(ExperimentConfig& config, const std::string& dotted) {
  const std::size_t eq = dotted.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ParseError("override must look like block.key=value: " + dotted);
  }
  const std::string path = dotted.substr(0, eq);
  const std::string value = dotted.substr(eq + 1);

  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // bare strings pass through
  }

  json doc = config_doc(config);
  json* node = &doc;
  std::size_t pos = 0;
  std::vector<std::string> segments;
  while (true) {
    const std::size_t dot = path.find('.', pos);
    segments.push_back(path.substr(pos, dot - pos));
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    const std::string& seg = segments[i];
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(seg);
      } catch (const std::exception&) {
        throw ConfigError("override " + path + ": \"" + seg +
                          "\" is not an array index");
      }
      if (idx >= node->size()) {
        throw ConfigError("override " + path + ": index " + seg +
                          " out of range");
      }
      node = &(*node)[idx];
    } else {
      node = &(*node)[seg];  // creates missing objects
    }
  }
  const std::string& last = segments.back();
  if (node->is_array()) {
    std::size_t idx = 0;
    try {
      idx = std::stoul(last);
    } catch (const std::exception&) {
      throw ConfigError("override " + path + ": \"" + last +
                        "\" is not an array index");
    }
    if (idx >= node->size()) {
      throw ConfigError("override " + path + ": index " + last +
                        " out of range");
    }
    (*node)[idx] = parsed;
  } else {
    (*node)[last] = parsed;
  }
  config = parse_config_doc(doc);
}

std::string serialize_config(const ExperimentConfig& config) {
  return config_doc(config).dump(2) + "\n";
}

RunResult run_experiment(const ExperimentConfig& config) {
  const MissionConfig mission = config.mission.build();
  Collector out(config);
  switch (config.mode) {
    case ExperimentMode::kSimulate:
      return run_simulate(config, mission, out);
    case ExperimentMode::kOptimize:
      return run_optimize(config, mission, out);
    case ExperimentMode::kCsc:
      return run_csc(config, mission, out);
    case ExperimentMode::kTpbvp:
      return run_tpbvp(config, mission, out);
    case ExperimentMode::kCompare:
      return run_compare(config, mission, out);
    case ExperimentMode::kGradCheck:
      return run_gradcheck(config, mission, out);
  }
  throw ConfigError("mode: unknown mode");
}

}  // namespace pmon
