// pmon -- command-line front end for the monitoring toolkit.
//
// One subcommand per experiment mode plus `run`, which takes the mode from
// the config file. Subcommands accept an optional JSON config (defaults
// reproduce the reference scenario), dotted overrides via --set, and a
// master seed via --seed or PMON_SEED.
//
// Exit codes: 0 success, 2 parse error (CLI arguments, JSON syntax,
// override syntax), 3 config or validation error, 4 numerical failure.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pmon/errors.hpp"
#include "pmon/experiment.hpp"
#include "pmon/manifest.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

std::uint64_t parse_seed_env(const char* text) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text, &end, 10);
  if (end == text || *end != '\0') {
    throw pmon::ParseError(std::string("PMON_SEED: not an unsigned integer: ") +
                           text);
  }
  return static_cast<std::uint64_t>(v);
}

int execute(const CommonArgs& args,
            std::optional<pmon::ExperimentMode> forced_mode) {
  pmon::ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = pmon::load_config(args.config_path);
  if (forced_mode) cfg.mode = *forced_mode;
  if (const char* env = std::getenv("PMON_SEED")) {
    cfg.seed = parse_seed_env(env);
  }
  if (args.seed) cfg.seed = *args.seed;
  for (const std::string& ov : args.overrides) pmon::apply_override(cfg, ov);
  if (!args.out_dir.empty()) cfg.output.dir = args.out_dir;

  const pmon::RunResult res = pmon::run_experiment(cfg);
  for (const std::string& line : res.lines) std::cout << line << '\n';
  std::cout << "wrote " << res.outputs.size() << " file(s) to "
            << cfg.output.dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"persistent-monitoring trajectory toolkit"};
  app.set_version_flag("--version", pmon::kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  std::optional<pmon::ExperimentMode> forced;
  bool from_file_mode = false;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* copt =
        cmd->add_option("config", args.config_path, "JSON config file");
    if (config_required) copt->required();
    cmd->add_option("--set", args.overrides,
                    "override a config value, block.key=value")
        ->type_size(1)
        ->allow_extra_args(false);
    cmd->add_option("--seed", args.seed,
                    "master seed (overrides config and PMON_SEED)");
    cmd->add_option("-o,--out", args.out_dir, "output directory");
  };

  auto* run = app.add_subcommand("run", "run the mode named in the config");
  add_common(run, true);
  run->callback([&] { from_file_mode = true; });

  const std::pair<const char*, pmon::ExperimentMode> modes[] = {
      {"simulate", pmon::ExperimentMode::kSimulate},
      {"optimize", pmon::ExperimentMode::kOptimize},
      {"csc", pmon::ExperimentMode::kCsc},
      {"tpbvp", pmon::ExperimentMode::kTpbvp},
      {"compare-lin-ellipse", pmon::ExperimentMode::kCompare},
      {"grad-check", pmon::ExperimentMode::kGradCheck},
  };
  const char* descriptions[] = {
      "integrate once and report J",
      "projected gradient descent on the trajectory parameters",
      "comparison search over sampled candidates",
      "heading-schedule descent from the agents' chord schedule",
      "normalized-cost sweep over the minor axis",
      "IPA gradient vs central finite differences",
  };
  for (std::size_t i = 0; i < std::size(modes); ++i) {
    auto* cmd = app.add_subcommand(modes[i].first, descriptions[i]);
    add_common(cmd, false);
    const pmon::ExperimentMode mode = modes[i].second;
    cmd->callback([&forced, mode] { forced = mode; });
  }

  try {
    app.parse(argc, argv);
    return execute(args, from_file_mode ? std::nullopt : forced);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const pmon::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const pmon::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 3;
  } catch (const pmon::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
