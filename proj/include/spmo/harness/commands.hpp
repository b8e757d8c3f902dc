#pragma once

#include <functional>
#include <optional>
#include <string>

#include "spmo/harness/config.hpp"
#include "spmo/harness/records.hpp"

namespace spmo::harness {

struct CommandOptions {
  std::string config_path;
  std::string out_dir;  // empty -> config [output] directory
  int workers = 0;      // 0 -> hardware concurrency
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  // compare-specific:
  std::optional<double> eps1, eps2;
  std::optional<double> xi_shift;
};

/// Run fn(0..n_tasks-1) on a small pool; results must be written to
/// task-indexed slots so aggregation is independent of scheduling.
void parallel_for(int n_tasks, int workers, const std::function<void(int)>& fn);

/// Monte Carlo grid execution shared by simulate/sweep: one record per
/// (n_reg, epsilon, path), task-indexed.
std::vector<RunRecord> execute_grid(const ExperimentConfig& cfg, int workers);

int cmd_simulate(const CommandOptions& opt);
int cmd_sweep(const CommandOptions& opt);
int cmd_compare(const CommandOptions& opt);
int cmd_verify(int workers);

}  // namespace spmo::harness
