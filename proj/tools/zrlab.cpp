// zrlab: run one experiment from a config file and write its outputs.

#include <exception>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "zrlab/commands.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kPrecondition = 1;
constexpr int kCheckFailed = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool check = false;
};

int run_experiment(const std::string& name, const Options& opt) {
  auto config = zrlab::ExperimentConfig::load(opt.config);
  if (config.command != name) {
    throw zrlab::ConfigError("config is for '" + config.command + "', not '" + name + "'");
  }
  if (opt.seed) config.seed = *opt.seed;
  const auto dir = zrlab::resolve_output_dir(config, opt.out);
  const auto outcome = zrlab::run_command(config, dir);
  std::cout << outcome.summary.dump(2) << "\n";
  std::cout << "wrote " << outcome.manifest.outputs.size() << " files to " << dir.string() << " (config "
            << outcome.manifest.config_hash << ")\n";
  for (const auto& f : outcome.failures) std::cerr << "check failed: " << f << "\n";
  return opt.check && !outcome.passed() ? kCheckFailed : kPass;
}

int run_selfcheck(const Options& opt) {
  std::optional<std::string> dir = opt.out;
  zrlab::ExperimentConfig config;
  if (!opt.config.empty()) config = zrlab::ExperimentConfig::load(opt.config);
  const auto report = zrlab::self_check(zrlab::resolve_output_dir(config, dir));
  for (const auto& p : report.problems) std::cerr << p << "\n";
  std::cout << report.manifests.size() << " manifests, " << report.problems.size() << " problems\n";
  return report.ok() ? kPass : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disordered zero-range and K-exclusion experiments"};
  app.require_subcommand(1);
  Options opt;
  for (const auto& name : zrlab::command_names()) {
    auto* sub = app.add_subcommand(name);
    auto* cfg = sub->add_option("--config", opt.config, "experiment config (JSON)");
    if (name != "selfcheck") cfg->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "override the config seed");
    sub->add_option("--out", opt.out, std::string("output directory (else $") + zrlab::kOutDirEnv + ", else output.dir)");
    sub->add_flag("--check", opt.check, "exit 2 when a declared acceptance check fails");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kPrecondition;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return name == "selfcheck" ? run_selfcheck(opt) : run_experiment(name, opt);
  } catch (const std::exception& e) {
    std::cerr << "zrlab " << name << ": " << e.what() << "\n";
    return kPrecondition;
  }
}
