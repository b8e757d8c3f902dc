#include "spmo/harness/records.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace spmo::harness {

using nlohmann::json;

std::string to_json_line(const RunRecord& r) {
  json j;
  j["schema"] = r.schema_version;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["path"] = r.path_index;
  j["epsilon"] = r.epsilon;
  j["n_reg"] = r.n_reg;
  json rep;
  rep["p"] = r.report.p;
  rep["sup_l2_pow_p"] = r.report.sup_l2_pow_p;
  rep["grad_zeta_bracket_pow_p"] = r.report.grad_zeta_bracket_pow_p;
  rep["penalty_l2_pow_p"] = r.report.penalty_l2_pow_p;
  rep["sup_lm1_pow"] = r.report.sup_lm1_pow;
  rep["penalty_weighted"] = r.report.penalty_weighted;
  rep["grad_phi_sq"] = r.report.grad_phi_sq;
  rep["penalty_l1"] = r.report.penalty_l1;
  rep["penalty_l2_sq_scaled"] = r.report.penalty_l2_sq_scaled;
  rep["penalty_sup_scaled"] = r.report.penalty_sup_scaled;
  rep["skorokhod"] = r.report.skorokhod;
  rep["min_u"] = r.report.min_u;
  rep["max_overshoot"] = r.report.max_overshoot;
  j["report"] = rep;
  json d;
  d["dt"] = r.diag.dt;
  d["steps"] = r.diag.steps;
  d["cfl_margin"] = r.diag.cfl_margin;
  d["obstacle_clamp_count"] = r.diag.obstacle_clamp_count;
  d["max_abs_u"] = r.diag.max_abs_u;
  d["min_u"] = r.diag.min_u;
  d["failed"] = r.diag.failed;
  d["fail_step"] = r.diag.fail_step;
  j["diag"] = d;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

RunRecord record_from_json(const std::string& line) {
  const json j = json::parse(line);
  RunRecord r;
  r.schema_version = j.at("schema").get<int>();
  if (r.schema_version != kRecordSchemaVersion)
    throw std::runtime_error("record: unsupported schema version");
  r.config_hash = j.at("config_hash").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.path_index = j.at("path").get<int>();
  r.epsilon = j.at("epsilon").get<double>();
  r.n_reg = j.at("n_reg").get<int>();
  const json& rep = j.at("report");
  r.report.p = rep.at("p").get<double>();
  r.report.sup_l2_pow_p = rep.at("sup_l2_pow_p").get<double>();
  r.report.grad_zeta_bracket_pow_p = rep.at("grad_zeta_bracket_pow_p").get<double>();
  r.report.penalty_l2_pow_p = rep.at("penalty_l2_pow_p").get<double>();
  r.report.sup_lm1_pow = rep.at("sup_lm1_pow").get<double>();
  r.report.penalty_weighted = rep.at("penalty_weighted").get<double>();
  r.report.grad_phi_sq = rep.at("grad_phi_sq").get<double>();
  r.report.penalty_l1 = rep.at("penalty_l1").get<double>();
  r.report.penalty_l2_sq_scaled = rep.at("penalty_l2_sq_scaled").get<double>();
  r.report.penalty_sup_scaled = rep.at("penalty_sup_scaled").get<double>();
  r.report.skorokhod = rep.at("skorokhod").get<double>();
  r.report.min_u = rep.at("min_u").get<double>();
  r.report.max_overshoot = rep.at("max_overshoot").get<double>();
  const json& d = j.at("diag");
  r.diag.dt = d.at("dt").get<double>();
  r.diag.steps = d.at("steps").get<long>();
  r.diag.cfl_margin = d.at("cfl_margin").get<double>();
  r.diag.obstacle_clamp_count = d.at("obstacle_clamp_count").get<long>();
  r.diag.max_abs_u = d.at("max_abs_u").get<double>();
  r.diag.min_u = d.at("min_u").get<double>();
  r.diag.failed = d.at("failed").get<bool>();
  r.diag.fail_step = d.at("fail_step").get<long>();
  r.wall_ms = j.at("wall_ms").get<double>();
  return r;
}

bool same_up_to_wallclock(const RunRecord& a, const RunRecord& b) {
  RunRecord a2 = a, b2 = b;
  a2.wall_ms = 0.0;
  b2.wall_ms = 0.0;
  return to_json_line(a2) == to_json_line(b2);
}

void write_records(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("records: cannot open '" + path + "' for append");
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<RunRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("records: cannot open '" + path + "'");
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(line));
  }
  return out;
}

void write_snapshot_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("snapshot: cannot open '" + path + "'");
  out.precision(12);
  out << "t";
  for (std::size_t i = 0; i < traj.grid.size(); ++i) {
    const auto x = node_coords(traj.grid, i);
    out << ",x" << x[0];
    if (traj.grid.dim == 2) out << "_y" << x[1];
  }
  out << '\n';
  for (std::size_t s = 0; s < traj.snapshots(); ++s) {
    out << traj.times[s];
    for (double v : traj.u[s].values) out << ',' << v;
    out << '\n';
  }
}

}  // namespace spmo::harness
