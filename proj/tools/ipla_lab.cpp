#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ipla/errors.hpp"
#include "ipla/experiments.hpp"

namespace {

int env_threads() {
  if (const char* raw = std::getenv("IPLA_LAB_THREADS")) {
    try {
      const int k = std::stoi(raw);
      if (k >= 1) return k;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid IPLA_LAB_THREADS='" << raw << "'\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interacting particle Langevin laboratory: maximum marginal likelihood "
               "estimation with particle Langevin dynamics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = env_threads();
  bool gnuplot = false;

  const std::vector<std::pair<std::string, ipla::ExperimentKind>> commands = {
      {"run", ipla::ExperimentKind::run},           {"sweep", ipla::ExperimentKind::sweep},
      {"compare", ipla::ExperimentKind::compare},   {"chaos", ipla::ExperimentKind::chaos},
      {"gradcheck", ipla::ExperimentKind::gradcheck}, {"bound", ipla::ExperimentKind::bound}};

  for (const auto& [name, kind] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--output-dir", output_dir, "override output_dir from the config");
    sub->add_option("--seed", seed, "override run.seed from the config")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--threads", threads, "worker threads (default: IPLA_LAB_THREADS or 1)");
    sub->add_flag("--gnuplot", gnuplot, "also emit a gnuplot script next to the CSV output");
  }

  CLI11_PARSE(app, argc, argv);

  ipla::ExperimentKind kind = ipla::ExperimentKind::run;
  for (const auto& [name, k] : commands)
    if (app.get_subcommand(name)->parsed()) kind = k;

  ipla::ExperimentConfig cfg;
  try {
    cfg = ipla::load_experiment_config(config_path);
  } catch (const ipla::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ipla::kExitConfigError;
  }
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (seed_set) cfg.run.seed = seed;
  if (threads < 1) {
    std::cerr << "config error: --threads must be >= 1\n";
    return ipla::kExitConfigError;
  }

  const ipla::ExecOptions opts{threads, gnuplot};
  return ipla::run_experiment(cfg, kind, opts, std::cout, std::cerr);
}
