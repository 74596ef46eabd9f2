#include <iostream>

#include <CLI11.hpp>

#include "app/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Objective-aware mixture-of-experts soft sensor with Pareto objective routing"};
  app.require_subcommand(1);

  std::string config, checkpoint, grid, run_dir;
  long k = 2, n = 100;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "train a model and write checkpoint, metrics, trajectory and manifest");
  train->add_option("config", config, "run config (JSON)")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test partition of the configured data");
  eval->add_option("config", config, "run config (JSON)")->required();
  eval->add_option("checkpoint", checkpoint, "checkpoint.json from train")->required();

  auto* ablate = app.add_subcommand("ablate", "run an ablation grid and write a results table");
  ablate->add_option("config", config, "base run config (JSON)")->required();
  ablate->add_option("grid", grid, "grid spec (JSON)")->required();

  auto* bench = app.add_subcommand("solver-bench", "check Frank-Wolfe bounds and oracle agreement on random Gram matrices");
  bench->add_option("--k", k, "number of objectives")->required();
  bench->add_option("--n", n, "number of instances")->required();
  bench->add_option("--seed", seed, "master seed");

  auto* plots = app.add_subcommand("export-plots", "write long-format plot tables for a run directory");
  plots->add_option("run_dir", run_dir, "directory written by train")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pmoe::app::kConfigError;
  }

  using namespace pmoe::app;
  if (*train) return cmd_train(config, std::cout, std::cerr);
  if (*eval) return cmd_eval(config, checkpoint, std::cout, std::cerr);
  if (*ablate) return cmd_ablate(config, grid, std::cout, std::cerr);
  if (*bench) return cmd_solver_bench(k, n, seed, std::cout, std::cerr);
  return cmd_export_plots(run_dir, std::cout, std::cerr);
}
