#include "gne/scenarios/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Distributed GNE seeking: simulate, check, oracle and sweep scenario configs"};
  app.require_subcommand(1);

  gne::cli::Command cmd;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cmd.config, "scenario config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", cmd.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "seed for sampled monotonicity bounds");
  };

  auto* simulate = app.add_subcommand("simulate", "integrate the closed loop and write the trajectory CSV");
  auto* check = app.add_subcommand("check", "estimate monotonicity constants and evaluate the sufficient conditions");
  auto* oracle = app.add_subcommand("oracle", "compute the reference GNE and its residuals");
  auto* sweep = app.add_subcommand("sweep", "simulate once per value of one config key");
  for (auto* sub : {simulate, check, oracle, sweep}) add_common(sub);
  sweep->add_option("param", cmd.sweep_param, "dotted config key, e.g. rule.alpha")->required();
  sweep->add_option("grid", cmd.sweep_grid, "comma-separated values, e.g. 0.5,1,2")->required();
  sweep->add_option("--jobs", cmd.workers, "parallel runs (default: hardware threads)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Usage problems are config errors; --help exits cleanly.
    return code == 0 ? 0 : gne::cli::config_error;
  }

  cmd.name = app.get_subcommands().front()->get_name();
  if (app.get_subcommands().front()->count("--seed") > 0) cmd.seed = seed;
  return gne::cli::run(cmd, std::cout, std::cerr);
}
