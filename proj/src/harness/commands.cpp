#include "spmo/harness/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "spmo/harness/fit.hpp"

namespace spmo::harness {

namespace fs = std::filesystem;

void parallel_for(int n_tasks, int workers, const std::function<void(int)>& fn) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n_tasks));
  if (workers == 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

std::uint64_t run_seed(const ExperimentConfig& cfg, std::size_t leg_index, int path) {
  if (cfg.couple_noise) return derive_seed(cfg.base_seed, static_cast<std::uint64_t>(path));
  return derive_seed(cfg.base_seed,
                     (leg_index + 1) * 0x10001ULL + static_cast<std::uint64_t>(path));
}

}  // namespace

std::vector<RunRecord> execute_grid(const ExperimentConfig& cfg, int workers) {
  const std::size_t legs = cfg.n_reg_list.size() * cfg.epsilon_list.size();
  const int n_tasks = static_cast<int>(legs) * cfg.paths;
  std::vector<RunRecord> records(static_cast<std::size_t>(n_tasks));
  const std::uint64_t chash = cfg.semantic_hash();

  parallel_for(n_tasks, workers, [&](int task) {
    const int path = task % cfg.paths;
    const std::size_t leg = static_cast<std::size_t>(task) / cfg.paths;
    const std::size_t ei = leg % cfg.epsilon_list.size();
    const std::size_t ni = leg / cfg.epsilon_list.size();
    const double eps = cfg.epsilon_list[ei];
    const int n_reg = cfg.n_reg_list[ni];

    const auto t0 = std::chrono::steady_clock::now();
    const Problem problem = cfg.build_problem(n_reg);
    const SolverConfig sc = cfg.build_solver_config(eps, n_reg);
    const std::uint64_t seed = run_seed(cfg, leg, path);
    const Trajectory traj = run(problem, sc, seed);
    RunRecord rec;
    rec.config_hash = chash;
    rec.seed = seed;
    rec.path_index = path;
    rec.epsilon = eps;
    rec.n_reg = n_reg;
    rec.report = estimate_all(traj, cfg.estimate_p);
    rec.diag = traj.diag;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    records[static_cast<std::size_t>(task)] = rec;

    if (cfg.write_snapshots) {
      fs::create_directories(cfg.directory);
      const std::string name = cfg.directory + "/snap_n" + std::to_string(n_reg) + "_eps" +
                               std::to_string(eps) + "_path" + std::to_string(path) + ".csv";
      write_snapshot_csv(name, traj);
    }
  });
  return records;
}

namespace {

ExperimentConfig load_with_overrides(const CommandOptions& opt) {
  ExperimentConfig cfg = load_config(opt.config_path);
  if (!opt.out_dir.empty()) cfg.directory = opt.out_dir;
  if (opt.seed) cfg.base_seed = *opt.seed;
  if (opt.paths) cfg.paths = *opt.paths;
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
  return cfg;
}

using Extractor = std::function<double(const RunRecord&)>;

const std::vector<std::pair<std::string, Extractor>>& tracked_functionals() {
  static const std::vector<std::pair<std::string, Extractor>> fns = {
      {"sup_l2_pow_p", [](const RunRecord& r) { return r.report.sup_l2_pow_p; }},
      {"grad_zeta_bracket_pow_p",
       [](const RunRecord& r) { return r.report.grad_zeta_bracket_pow_p; }},
      {"penalty_l2_pow_p", [](const RunRecord& r) { return r.report.penalty_l2_pow_p; }},
      {"sup_lm1_pow", [](const RunRecord& r) { return r.report.sup_lm1_pow; }},
      {"penalty_weighted", [](const RunRecord& r) { return r.report.penalty_weighted; }},
      {"grad_phi_sq", [](const RunRecord& r) { return r.report.grad_phi_sq; }},
      {"penalty_l1", [](const RunRecord& r) { return r.report.penalty_l1; }},
      {"penalty_l2_norm",
       [](const RunRecord& r) {
         return r.epsilon * std::sqrt(r.report.penalty_l2_sq_scaled);
       }},
      {"penalty_l2_sq_scaled",
       [](const RunRecord& r) { return r.report.penalty_l2_sq_scaled; }},
      {"penalty_sup_scaled", [](const RunRecord& r) { return r.report.penalty_sup_scaled; }},
      {"skorokhod_abs", [](const RunRecord& r) { return std::abs(r.report.skorokhod); }},
  };
  return fns;
}

std::vector<double> leg_samples(const std::vector<RunRecord>& records, double eps, int n_reg,
                                const Extractor& f) {
  std::vector<double> out;
  for (const auto& r : records)
    if (r.epsilon == eps && r.n_reg == n_reg) out.push_back(f(r));
  return out;
}

}  // namespace

int cmd_simulate(const CommandOptions& opt) {
  ExperimentConfig cfg = load_with_overrides(opt);
  const auto records = execute_grid(cfg, opt.workers);
  fs::create_directories(cfg.directory);
  const std::string path = cfg.directory + "/runs.jsonl";
  std::ofstream(path, std::ios::trunc).close();  // fresh file per invocation
  write_records(path, records);

  std::cout << "wrote " << records.size() << " records to " << path << '\n';
  for (int n_reg : cfg.n_reg_list)
    for (double eps : cfg.epsilon_list) {
      std::cout << "  n_reg=" << n_reg << " eps=" << eps << ":";
      for (const auto& [name, f] : tracked_functionals()) {
        if (name != "penalty_l2_norm" && name != "skorokhod_abs" && name != "sup_l2_pow_p")
          continue;
        std::cout << ' ' << name << '=' << mean(leg_samples(records, eps, n_reg, f));
      }
      std::cout << '\n';
    }
  bool failed = false;
  for (const auto& r : records) failed |= r.diag.failed;
  if (failed) std::cerr << "warning: at least one run aborted (non-finite field)\n";
  return failed ? 1 : 0;
}

int cmd_sweep(const CommandOptions& opt) {
  ExperimentConfig cfg = load_with_overrides(opt);
  const bool sweep_eps = cfg.epsilon_list.size() >= 3;
  const bool sweep_n = cfg.n_reg_list.size() >= 3;
  if (!sweep_eps && !sweep_n)
    throw std::invalid_argument("sweep: need at least 3 sweep points in epsilon or n_reg");

  const auto records = execute_grid(cfg, opt.workers);
  fs::create_directories(cfg.directory);

  std::ofstream means_csv(cfg.directory + "/sweep.csv");
  means_csv.precision(12);
  means_csv << "n_reg,epsilon";
  for (const auto& [name, f] : tracked_functionals()) means_csv << ',' << name;
  means_csv << '\n';
  for (int n_reg : cfg.n_reg_list)
    for (double eps : cfg.epsilon_list) {
      means_csv << n_reg << ',' << eps;
      for (const auto& [name, f] : tracked_functionals())
        means_csv << ',' << mean(leg_samples(records, eps, n_reg, f));
      means_csv << '\n';
    }

  std::ofstream fits_csv(cfg.directory + "/sweep_fits.csv");
  std::ofstream txt(cfg.directory + "/sweep.txt");
  fits_csv << "swept,fixed,functional,slope,ci_lo,ci_hi,degenerate\n";
  fits_csv.precision(12);
  txt.precision(4);

  auto fit_block = [&](const std::string& swept, const std::string& fixed_desc,
                       const std::vector<double>& xs,
                       const std::function<std::vector<double>(double x, const Extractor&)>&
                           samples_at) {
    txt << "== slope of functionals vs " << swept << "  (" << fixed_desc << ") ==\n";
    for (const auto& [name, f] : tracked_functionals()) {
      std::vector<std::vector<double>> samples;
      for (double x : xs) samples.push_back(samples_at(x, f));
      const SlopeFit fit = loglog_fit_bootstrap(xs, samples);
      fits_csv << swept << ',' << fixed_desc << ',' << name << ',' << fit.slope << ','
               << fit.ci_lo << ',' << fit.ci_hi << ',' << (fit.degenerate ? 1 : 0) << '\n';
      txt << "  " << name << ": ";
      if (fit.degenerate)
        txt << "degenerate (non-positive values)\n";
      else
        txt << "slope " << fit.slope << "  [" << fit.ci_lo << ", " << fit.ci_hi << "]\n";
    }
  };

  if (sweep_eps)
    for (int n_reg : cfg.n_reg_list)
      fit_block("epsilon", "n_reg=" + std::to_string(n_reg), cfg.epsilon_list,
                [&](double eps, const Extractor& f) {
                  return leg_samples(records, eps, n_reg, f);
                });
  if (sweep_n)
    for (double eps : cfg.epsilon_list) {
      std::vector<double> xs(cfg.n_reg_list.begin(), cfg.n_reg_list.end());
      fit_block("n_reg", "epsilon=" + std::to_string(eps), xs,
                [&](double n, const Extractor& f) {
                  return leg_samples(records, eps, static_cast<int>(n), f);
                });
    }

  txt.close();
  fits_csv.close();
  std::ifstream echo(cfg.directory + "/sweep.txt");
  std::cout << echo.rdbuf();
  std::cout << "sweep tables in " << cfg.directory << "/sweep.csv, sweep_fits.csv\n";
  return 0;
}

int cmd_compare(const CommandOptions& opt) {
  ExperimentConfig cfg = load_with_overrides(opt);
  fs::create_directories(cfg.directory);
  const int n_reg = cfg.n_reg_list.front();

  if (opt.xi_shift) {
    // xi-perturbation mode: second leg starts from xi + shift * bump.
    const double shift = *opt.xi_shift;
    const Problem base_problem = cfg.build_problem(n_reg);
    ExperimentConfig cfg2 = cfg;
    Problem shifted_problem = base_problem;
    {
      const GridSpec g = cfg.grid();
      const double peak = bump::rho(0.5);
      Field pert = Field::sample(g, [&](std::array<double, 2> x) {
        double v = shift;
        for (int a = 0; a < g.dim; ++a) {
          double dx = x[static_cast<std::size_t>(a)] - 0.5;
          dx -= std::round(dx);
          v *= bump::rho(dx / 0.2 + 0.5) / peak;
        }
        return v;
      });
      Field xi2 = cfg.build_xi();
      for (std::size_t i = 0; i < xi2.size(); ++i) xi2.values[i] += pert.values[i];
      if (cfg.obstacle && cfg.s0 < xi2.max())
        throw std::invalid_argument("compare: perturbed datum exceeds the barrier start");
      if (cfg.xi_mollify)
        shifted_problem.xi = mollified_initial(xi2, n_reg);
      else
        shifted_problem.xi = xi2;
    }
    const SolverConfig sc = cfg.build_solver_config(cfg.epsilon_list.front(), n_reg);

    std::vector<std::vector<double>> l1_curves(static_cast<std::size_t>(cfg.paths));
    std::vector<double> times;
    parallel_for(cfg.paths, opt.workers, [&](int path) {
      const std::uint64_t seed = run_seed(cfg, 0, path);
      const Trajectory a = run(base_problem, sc, seed);
      const Trajectory b = run(shifted_problem, sc, seed);
      std::vector<double> curve(a.snapshots());
      for (std::size_t s = 0; s < a.snapshots(); ++s) {
        Field diff = a.u[s];
        for (std::size_t i = 0; i < diff.size(); ++i) diff.values[i] -= b.u[s].values[i];
        curve[s] = lp_norm(diff, 1.0);
      }
      l1_curves[static_cast<std::size_t>(path)] = std::move(curve);
      if (path == 0) times = a.times;
    });

    std::ofstream out(cfg.directory + "/compare_l1.csv");
    out.precision(12);
    out << "t,mean_l1,ratio_to_initial\n";
    double sup_ratio = 0.0;
    const std::size_t ns = l1_curves.front().size();
    double base = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      double m = 0.0;
      for (const auto& c : l1_curves) m += c[s];
      m /= static_cast<double>(cfg.paths);
      if (s == 0) base = m;
      const double ratio = base > 0.0 ? m / base : 0.0;
      sup_ratio = std::max(sup_ratio, ratio);
      out << times[s] << ',' << m << ',' << ratio << '\n';
    }
    std::cout << "xi-shift compare: sup_t E||u - u~||_L1 / E||xi - xi~||_L1 = " << sup_ratio
              << '\n'
              << "curve written to " << cfg.directory << "/compare_l1.csv\n";
    return 0;
  }

  // epsilon-comparison mode
  double e1 = 0.0, e2 = 0.0;
  if (opt.eps1 && opt.eps2) {
    e1 = *opt.eps1;
    e2 = *opt.eps2;
  } else {
    if (cfg.epsilon_list.size() < 2)
      throw std::invalid_argument("compare: need two epsilon values (or --eps1/--eps2)");
    e1 = cfg.epsilon_list[0];
    e2 = cfg.epsilon_list[1];
  }
  if (e1 < e2) std::swap(e1, e2);
  const Problem problem = cfg.build_problem(n_reg);
  const SolverConfig sc1 = cfg.build_solver_config(e1, n_reg);
  const SolverConfig sc2 = cfg.build_solver_config(e2, n_reg);

  struct Row {
    std::uint64_t seed;
    double min_diff, min_u2;
  };
  std::vector<Row> rows(static_cast<std::size_t>(cfg.paths));
  std::vector<std::vector<double>> l1_curves(static_cast<std::size_t>(cfg.paths));
  std::vector<double> times;
  parallel_for(cfg.paths, opt.workers, [&](int path) {
    const std::uint64_t seed = run_seed(cfg, 0, path);
    const Trajectory t1 = run(problem, sc1, seed);
    const Trajectory t2 = run(problem, sc2, seed);
    const ComparisonResult c = comparison_check(t1, t2);
    rows[static_cast<std::size_t>(path)] = {seed, c.min_diff, c.min_u2};
    std::vector<double> curve(t1.snapshots());
    for (std::size_t s = 0; s < t1.snapshots(); ++s) {
      Field diff = t1.u[s];
      for (std::size_t i = 0; i < diff.size(); ++i) diff.values[i] -= t2.u[s].values[i];
      curve[s] = lp_norm(diff, 1.0);
    }
    l1_curves[static_cast<std::size_t>(path)] = std::move(curve);
    if (path == 0) times = t1.times;
  });

  std::ofstream paths_csv(cfg.directory + "/compare_paths.csv");
  paths_csv.precision(12);
  paths_csv << "path,seed,min_diff,min_u_eps2\n";
  double worst_diff = std::numeric_limits<double>::infinity();
  double worst_u2 = std::numeric_limits<double>::infinity();
  for (int p = 0; p < cfg.paths; ++p) {
    const Row& r = rows[static_cast<std::size_t>(p)];
    paths_csv << p << ',' << r.seed << ',' << r.min_diff << ',' << r.min_u2 << '\n';
    worst_diff = std::min(worst_diff, r.min_diff);
    worst_u2 = std::min(worst_u2, r.min_u2);
  }
  std::ofstream curve_csv(cfg.directory + "/compare_l1.csv");
  curve_csv.precision(12);
  curve_csv << "t,mean_l1\n";
  for (std::size_t s = 0; s < l1_curves.front().size(); ++s) {
    double m = 0.0;
    for (const auto& c : l1_curves) m += c[s];
    curve_csv << times[s] << ',' << m / static_cast<double>(cfg.paths) << '\n';
  }
  std::cout << "epsilon compare (eps1=" << e1 << " > eps2=" << e2 << ", " << cfg.paths
            << " paths):\n"
            << "  min over paths of min(u_eps1 - u_eps2) = " << worst_diff << '\n'
            << "  min over paths of min(u_eps2)          = " << worst_u2 << '\n'
            << "per-path table in " << cfg.directory << "/compare_paths.csv\n";
  return 0;
}

}  // namespace spmo::harness
