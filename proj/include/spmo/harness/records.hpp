#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spmo/estimators.hpp"

namespace spmo::harness {

inline constexpr int kRecordSchemaVersion = 1;

/// One line of runs.jsonl: a single (epsilon, n_reg, path) run.
struct RunRecord {
  int schema_version = kRecordSchemaVersion;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int path_index = 0;
  double epsilon = 0.0;
  int n_reg = 0;
  EstimateReport report;
  Diagnostics diag;
  double wall_ms = 0.0;
};

std::string to_json_line(const RunRecord& r);
RunRecord record_from_json(const std::string& line);

/// Equality up to the wall-clock field (used by reproducibility checks).
bool same_up_to_wallclock(const RunRecord& a, const RunRecord& b);

void write_records(const std::string& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records(const std::string& path);

/// Field snapshots as CSV: header row carries the node coordinates, each
/// following row is "t, u(t, x_0), u(t, x_1), ...".
void write_snapshot_csv(const std::string& path, const Trajectory& traj);

}  // namespace spmo::harness
