#include <iostream>

#include "CLI11.hpp"
#include "spmo/harness/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulator and verification harness for the obstacle problem for "
               "stochastic porous media equations on the torus"};
  app.require_subcommand(1);

  spmo::harness::CommandOptions opt;
  double eps1 = 0.0, eps2 = 0.0, xi_shift = 0.0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* c = cmd->add_option("--config", opt.config_path, "experiment config file");
    if (needs_config) c->required();
    cmd->add_option("--out", opt.out_dir, "output directory (overrides config)");
    cmd->add_option("--workers", opt.workers, "worker threads (0 = hardware)");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { opt.seed = s; }, "base seed override");
    cmd->add_option_function<int>(
        "--paths", [&](int p) { opt.paths = p; }, "Monte Carlo path count override");
  };

  auto* sim = app.add_subcommand("simulate", "run the Monte Carlo grid, write run records");
  add_common(sim, true);

  auto* sweep = app.add_subcommand("sweep", "parameter sweep with fitted convergence orders");
  add_common(sweep, true);

  auto* verify = app.add_subcommand("verify", "run the invariant/property suite");
  verify->add_option("--workers", opt.workers, "worker threads");

  auto* compare = app.add_subcommand("compare", "coupled two-leg comparison runs");
  add_common(compare, true);
  auto* o1 = compare->add_option("--eps1", eps1, "larger penalty parameter");
  auto* o2 = compare->add_option("--eps2", eps2, "smaller penalty parameter");
  auto* os = compare->add_option("--xi-shift", xi_shift,
                                 "compare against initial data perturbed by this bump mass");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return spmo::harness::cmd_simulate(opt);
    if (sweep->parsed()) return spmo::harness::cmd_sweep(opt);
    if (verify->parsed()) return spmo::harness::cmd_verify(opt.workers);
    if (compare->parsed()) {
      if (os->count()) opt.xi_shift = xi_shift;
      if (o1->count()) opt.eps1 = eps1;
      if (o2->count()) opt.eps2 = eps2;
      return spmo::harness::cmd_compare(opt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
