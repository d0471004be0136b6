#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sgl/orchestrator.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Ginzburg-Landau simulation and analysis lab"};
  app.set_version_flag("--version", std::string(SGL_VERSION));
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  const char* commands[][2] = {
      {"check", "Check the dissipativity hypothesis and report the margin"},
      {"simulate", "Integrate an ensemble and write trajectories and checkpoints"},
      {"pair", "Evolve nearby pairs and fit the divergence envelope"},
      {"measure", "Cesaro means, stationarity, homogeneity and tightness"},
      {"entropy", "Topological, measure-theoretic and eps-entropy estimates"},
      {"kernels", "Kernel tables, decay fits and Cartwright errors"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("--config", config, "TOML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (default: output.dir of the config)");
    sub->add_option("--seed", seed, "Base seed, overrides ensemble.base_seed");
    sub->add_option("--threads", threads, "Worker threads (fallback: SGL_THREADS, then 1)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  sgl::CommandOptions options;
  options.out = out;
  options.seed = seed;
  options.threads = sgl::resolve_threads(threads);
  const std::string name = app.get_subcommands().front()->get_name();
  return sgl::run_command(name, config, options, std::cout, std::cerr);
}
