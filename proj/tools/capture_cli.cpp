#include "vhip/io/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace vhip::io;

int main(int argc, char** argv) {
  CLI::App app{"Capture trajectories of the variable-height inverted pendulum"};
  app.require_subcommand(1);

  std::string scenario, out;
  RunOptions run;
  std::optional<int> n, n_alpha;
  std::optional<double> alpha, mu;

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Trajectory CSV; the summary is written next to it as .json");
    sub->add_option("--n", n, "Number of s-partition intervals")->check(CLI::Range(2, 64));
    sub->add_option("--alpha", alpha, "Fixed alpha in (0, 1)");
    sub->add_option("--n-alpha", n_alpha, "Alpha samples per feasible interval")->check(CLI::PositiveNumber);
    sub->add_option("--mu", mu, "Penalty weight on the boundedness condition")->check(CLI::PositiveNumber);
    sub->add_flag("--qr-cache", run.qr_cache, "Use precomputed factorizations of every working set");
  };
  auto* zero = app.add_subcommand("zero-step", "Capture onto the single contact of the scenario");
  add_run_flags(zero);
  auto* one = app.add_subcommand("one-step", "Capture through a step onto the second contact");
  add_run_flags(one);
  one->add_flag("--equality", run.equality, "Match the switch time to t_swing instead of bounding it");
  auto* walk = app.add_subcommand("walk", "Follow the scenario's contacts as a footstep plan");
  add_run_flags(walk);

  BenchOptions bench;
  std::string bench_out;
  auto* bsub = app.add_subcommand("bench", "Time the solver on seeded random problems");
  bsub->add_option("--n", bench.sizes, "Partition sizes (repeatable)")->check(CLI::Range(2, 20));
  bsub->add_option("--count", bench.count, "Problems per size")->check(CLI::NonNegativeNumber);
  bsub->add_option("--seed", bench.seed, "Problem generator seed");
  bsub->add_option("--mu", bench.mu, "Penalty weight")->check(CLI::PositiveNumber);
  bsub->add_option("--out", bench_out, "CSV table output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  run.n = n;
  run.alpha = alpha;
  run.n_alpha = n_alpha;
  run.mu = mu;
  run.threads = threads_from_env();
  bench.threads = run.threads;

  if (zero->parsed()) return run_zero_step(scenario, out, run, std::cout, std::cerr);
  if (one->parsed()) return run_one_step(scenario, out, run, std::cout, std::cerr);
  if (walk->parsed()) return run_walk(scenario, out, run, std::cout, std::cerr);
  return run_bench(bench, bench_out, std::cout, std::cerr);
}
