// Acceptance suite: one check per release criterion, one PASS/FAIL line each.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "spmo/estimators.hpp"
#include "spmo/harness/commands.hpp"
#include "spmo/harness/fit.hpp"

using namespace spmo;
using namespace spmo::harness;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%2d] %s %-28s %s\n", id, pass ? "PASS" : "FAIL", name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(4);
  ss << x;
  return ss.str();
}

// Shared stochastic baseline: d=1, m=2, linear noise, linear forcing.
ExperimentConfig stochastic_base() {
  ExperimentConfig cfg;
  cfg.m = 2.0;
  cfg.K = 1.0;
  cfg.N0 = 0.5;
  cfg.kappa = 0.25;
  cfg.forcing_kind = ForcingLaw::Kind::linear;
  cfg.sigma_kind = NoiseLaw::Kind::linear;
  cfg.sigma_amplitude = 0.5;
  cfg.k_modes = 8;
  cfg.xi_kind = "bump";
  cfg.xi_amplitude = 0.45;
  cfg.xi_center = 0.5;
  cfg.xi_width = 0.5;
  cfg.s0 = 0.5;
  cfg.h_s = 0.0;
  cfg.obstacle = true;
  cfg.d = 1;
  cfg.n_axis = 64;
  cfg.dt_auto = true;
  cfg.cfl_safety = 0.5;
  cfg.backend = Backend::fd;
  cfg.penalty_mode = PenaltyMode::implicit_resolve;
  cfg.snapshot_every = 10;
  cfg.epsilon_list = {0.1};
  cfg.n_reg_list = {8};
  cfg.paths = 32;
  cfg.base_seed = 20240811;
  cfg.couple_noise = true;
  cfg.T = 0.25;
  return cfg;
}

// ---------------------------------------------------------------------------

void criterion_1_regularization_contract() {
  bool pass = true;
  double worst_floor = 1e300, worst_close = 1e300;
  for (double m : {2.0, 3.0}) {
    const PorousLaw base = PorousLaw::make(m, 1.0);
    for (int n : {2, 4, 8, 16, 64}) {
      const RegularizedLaw reg(base, n);
      for (int i = 0; i <= 10000; ++i) {
        const double r = -static_cast<double>(n) + 2.0 * n * i / 10000.0;
        const double z = reg.zeta_n(r);
        worst_floor = std::min(worst_floor, z - 2.0 / n);
        worst_close = std::min(worst_close, 4.0 / n - std::abs(base.zeta(r) - z));
      }
    }
  }
  pass = worst_floor >= -1e-15 && worst_close >= 0.0;
  report(1, "regularization contract", pass,
         "min(zeta_n - 2/n)=" + fmt(worst_floor) +
             ", min(4/n - |zeta-zeta_n|)=" + fmt(worst_close));
}

void criterion_2_barenblatt_oracle() {
  const double t_start = now_s();
  ExperimentConfig cfg = stochastic_base();
  cfg.sigma_amplitude = 0.0;
  cfg.N0 = 0.0;
  cfg.obstacle = false;
  cfg.xi_kind = "barenblatt";
  cfg.xi_c = 0.1;
  cfg.xi_t0 = 0.01;
  cfg.xi_mollify = false;
  cfg.n_axis = 256;
  cfg.n_reg_list = {32};
  cfg.cfl_safety = 0.9;
  cfg.T = 0.05;
  cfg.snapshot_every = 1 << 30;
  validate(cfg);

  const Problem p = cfg.build_problem(32);
  const SolverConfig sc = cfg.build_solver_config(0.1, 32);
  const Trajectory traj = run(p, sc, 1);  // single-threaded by construction
  Field exact = Field::sample(p.grid, [&](std::array<double, 2> x) {
    return barenblatt(x[0], cfg.xi_center, cfg.xi_t0 + cfg.T, cfg.m, cfg.xi_c);
  });
  Field diff = traj.u.back();
  for (std::size_t i = 0; i < diff.size(); ++i) diff.values[i] -= exact.values[i];
  const double err = lp_norm(diff, 1.0);
  const double wall = now_s() - t_start;
  const bool pass = !traj.diag.failed && err <= 5e-3 && wall < 10.0;
  report(2, "deterministic pme oracle", pass,
         "L1 error=" + fmt(err) + " (<=5e-3), wall=" + fmt(wall) + "s (<10)");
}

// per-path negative-part functional: sup over snapshots of the L1 norm of u^-
double negative_part_metric(const Trajectory& t) {
  double worst = 0.0;
  for (const auto& u : t.u) {
    double l1 = 0.0;
    for (double v : u.values)
      if (v < 0.0) l1 -= v;
    worst = std::max(worst, l1 * t.grid.h);
  }
  return worst;
}

void criterion_3_nonnegativity() {
  ExperimentConfig cfg = stochastic_base();
  cfg.T = 0.05;
  validate(cfg);
  auto run_neg = [&](double safety_scale) {
    ExperimentConfig c = cfg;
    c.cfl_safety = cfg.cfl_safety * safety_scale;  // quartering dt via the safety factor
    double neg = 0.0, sup_u = 0.0;
    std::vector<double> negs(static_cast<std::size_t>(c.paths));
    std::vector<double> sups(static_cast<std::size_t>(c.paths));
    parallel_for(c.paths, 0, [&](int path) {
      const Problem p = c.build_problem(8);
      const SolverConfig sc = c.build_solver_config(0.1, 8);
      const Trajectory t = run(p, sc, derive_seed(c.base_seed, static_cast<std::uint64_t>(path)));
      negs[static_cast<std::size_t>(path)] = negative_part_metric(t);
      sups[static_cast<std::size_t>(path)] = t.diag.max_abs_u;
    });
    for (int i = 0; i < c.paths; ++i) {
      neg += negs[static_cast<std::size_t>(i)];
      sup_u = std::max(sup_u, sups[static_cast<std::size_t>(i)]);
    }
    return std::make_pair(neg / c.paths, sup_u);
  };
  const auto [neg_coarse, sup_coarse] = run_neg(1.0);
  const auto [neg_fine, sup_fine] = run_neg(0.25);
  const double scale = std::max(sup_coarse, sup_fine);
  const bool small = neg_coarse <= 1e-3 * scale && neg_fine <= 1e-3 * scale;
  const double floor = 1e-12 * scale;
  bool order_ok;
  std::string order_note;
  if (neg_coarse <= floor && neg_fine <= floor) {
    order_ok = true;  // scheme preserves non-negativity to machine precision
    order_note = "u^- at machine zero for both steps";
  } else {
    const double order =
        std::log(std::max(neg_coarse, floor) / std::max(neg_fine, floor)) / std::log(4.0);
    order_ok = order >= 0.5;
    order_note = "order(dt/4)=" + fmt(order);
  }
  report(3, "non-negativity", small && order_ok,
         "E sup_t ||u^-||_L1 = " + fmt(neg_coarse) + " vs 1e-3*sup|u|=" + fmt(1e-3 * scale) +
             "; " + order_note);
}

// Config with a genuinely binding barrier: the field starts just under S0
// and the forcing presses it into the constraint for most of the horizon.
ExperimentConfig binding_barrier_base() {
  ExperimentConfig cfg = stochastic_base();
  cfg.sigma_amplitude = 0.3;
  cfg.N0 = 1.0;
  cfg.xi_kind = "constant";
  cfg.xi_amplitude = 0.42;
  cfg.s0 = 0.5;
  cfg.cfl_safety = 0.9;
  return cfg;
}

Field rippled_xi(const GridSpec& g, double base = 0.42) {
  return Field::sample(g, [base](std::array<double, 2> x) {
    return base + 0.03 * std::sin(2.0 * M_PI * x[0]);
  });
}

void criterion_4_penalty_scaling() {
  const double t_start = now_s();
  ExperimentConfig cfg = binding_barrier_base();
  // long horizon with early contact so even eps = 0.2 reaches the
  // quasi-stationary regime of the penalty
  cfg.T = 1.0;
  cfg.epsilon_list = {0.2, 0.1, 0.05, 0.025};
  validate(cfg);

  std::vector<RunRecord> records(static_cast<std::size_t>(4 * cfg.paths));
  const Problem base = cfg.build_problem(8);
  parallel_for(4 * cfg.paths, 0, [&](int task) {
    const int path = task % cfg.paths;
    const double eps = cfg.epsilon_list[static_cast<std::size_t>(task / cfg.paths)];
    Problem p = base;
    p.xi = rippled_xi(p.grid, 0.46);
    const SolverConfig sc = cfg.build_solver_config(eps, 8);
    const Trajectory t =
        run(p, sc, derive_seed(cfg.base_seed, static_cast<std::uint64_t>(path)));
    RunRecord rec;
    rec.epsilon = eps;
    rec.n_reg = 8;
    rec.report = estimate_all(t, 2.0);
    records[static_cast<std::size_t>(task)] = rec;
  });

  auto samples_for = [&](const std::function<double(const RunRecord&)>& f) {
    std::vector<std::vector<double>> out;
    for (double eps : cfg.epsilon_list) {
      std::vector<double> col;
      for (const auto& r : records)
        if (r.epsilon == eps) col.push_back(f(r));
      out.push_back(col);
    }
    return out;
  };
  const SlopeFit pen_fit = loglog_fit_bootstrap(
      cfg.epsilon_list, samples_for([](const RunRecord& r) {
        return r.epsilon * std::sqrt(r.report.penalty_l2_sq_scaled);
      }));
  const SlopeFit sko_fit = loglog_fit_bootstrap(
      cfg.epsilon_list,
      samples_for([](const RunRecord& r) { return std::abs(r.report.skorokhod); }));
  const double wall = now_s() - t_start;
  const bool pass = !pen_fit.degenerate && !sko_fit.degenerate && pen_fit.slope >= 0.8 &&
                    sko_fit.slope >= 0.8 && wall < 300.0;
  report(4, "penalty scaling in epsilon", pass,
         "slope ||(u-S)^+||_L2=" + fmt(pen_fit.slope) + " [" + fmt(pen_fit.ci_lo) + "," +
             fmt(pen_fit.ci_hi) + "], slope |skorokhod|=" + fmt(sko_fit.slope) +
             ", wall=" + fmt(wall) + "s");
}

void criterion_5_uniformity() {
  ExperimentConfig cfg = binding_barrier_base();
  cfg.T = 0.4;
  cfg.paths = 16;
  cfg.epsilon_list = {0.2, 0.05};
  cfg.n_reg_list = {4, 16, 64};
  validate(cfg);

  const std::size_t legs = cfg.n_reg_list.size() * cfg.epsilon_list.size();
  std::vector<RunRecord> records(legs * static_cast<std::size_t>(cfg.paths));
  parallel_for(static_cast<int>(records.size()), 0, [&](int task) {
    const int path = task % cfg.paths;
    const std::size_t leg = static_cast<std::size_t>(task / cfg.paths);
    const double eps = cfg.epsilon_list[leg % cfg.epsilon_list.size()];
    const int n_reg = cfg.n_reg_list[leg / cfg.epsilon_list.size()];
    Problem p = cfg.build_problem(n_reg);
    p.xi = rippled_xi(p.grid);
    const SolverConfig sc = cfg.build_solver_config(eps, n_reg);
    const Trajectory t =
        run(p, sc, derive_seed(cfg.base_seed, static_cast<std::uint64_t>(path)));
    RunRecord rec;
    rec.epsilon = eps;
    rec.n_reg = n_reg;
    rec.report = estimate_all(t, 2.0);
    records[static_cast<std::size_t>(task)] = rec;
  });

  struct Component {
    std::string name;
    std::function<double(const RunRecord&)> f;
    bool penalty;  // premultiplied by a power of 1/eps
  };
  const std::vector<Component> comps = {
      {"sup_l2^p", [](const RunRecord& r) { return r.report.sup_l2_pow_p; }, false},
      {"grad_bracket^p",
       [](const RunRecord& r) { return r.report.grad_zeta_bracket_pow_p; }, false},
      {"penalty_l2^p", [](const RunRecord& r) { return r.report.penalty_l2_pow_p; }, true},
      {"sup_lm1", [](const RunRecord& r) { return r.report.sup_lm1_pow; }, false},
      {"penalty_weighted",
       [](const RunRecord& r) { return r.report.penalty_weighted; }, true},
  };

  auto cell_mean = [&](const Component& comp, int n, double eps) {
    double acc = 0.0;
    int count = 0;
    for (const auto& r : records)
      if (r.n_reg == n && r.epsilon == eps) {
        acc += comp.f(r);
        ++count;
      }
    return acc / count;
  };

  bool pass = true;
  std::string detail;
  for (const auto& comp : comps) {
    // Band: the epsilon-premultiplied penalty components legitimately decay
    // with epsilon (their own scaling criterion demands it), so their band is
    // taken across n at fixed epsilon; plain components band over all cells.
    double band = 0.0;
    if (comp.penalty) {
      for (double eps : cfg.epsilon_list) {
        double lo = 1e300, hi = 0.0;
        for (int n : cfg.n_reg_list) {
          const double v = cell_mean(comp, n, eps);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        band = std::max(band, hi / std::max(lo, 1e-300));
      }
    } else {
      double lo = 1e300, hi = 0.0;
      for (int n : cfg.n_reg_list)
        for (double eps : cfg.epsilon_list) {
          const double v = cell_mean(comp, n, eps);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      band = hi / std::max(lo, 1e-300);
    }

    // No blow-up: growth slope vs n (mean over eps) below 0.2.
    std::vector<double> ns, n_means;
    for (int n : cfg.n_reg_list) {
      double acc = 0.0;
      for (double eps : cfg.epsilon_list) acc += cell_mean(comp, n, eps);
      ns.push_back(static_cast<double>(n));
      n_means.push_back(acc / static_cast<double>(cfg.epsilon_list.size()));
    }
    const SlopeFit nfit = loglog_fit(ns, n_means);
    bool comp_ok = band <= 3.0 && !nfit.degenerate && nfit.slope < 0.2;

    // No blow-up with 1/eps for the premultiplied penalty components.
    double eps_growth = 0.0;
    if (comp.penalty) {
      double at_small_eps = 0.0, at_big_eps = 0.0;
      for (int n : cfg.n_reg_list) {
        at_small_eps += cell_mean(comp, n, 0.05);
        at_big_eps += cell_mean(comp, n, 0.2);
      }
      eps_growth = std::log(at_small_eps / std::max(at_big_eps, 1e-300)) /
                   std::log((1.0 / 0.05) / (1.0 / 0.2));
      comp_ok &= eps_growth < 0.2;
    }
    const std::string line = comp.name + " band=" + fmt(band) + " n-slope=" +
                             fmt(nfit.slope) +
                             (comp.penalty ? " invEps-slope=" + fmt(eps_growth) : "") + "; ";
    if (!comp_ok) {
      pass = false;
      detail += line;
    }
  }
  if (pass) detail = "bands <= 3 and growth slopes < 0.2 for all five components";
  report(5, "uniformity in (n, eps)", pass, detail);
}

void criterion_6_comparison() {
  ExperimentConfig cfg = binding_barrier_base();
  cfg.T = 0.25;
  cfg.paths = 16;
  validate(cfg);
  Problem p = cfg.build_problem(8);
  p.xi = rippled_xi(p.grid);
  const SolverConfig s1 = cfg.build_solver_config(0.2, 8);
  const SolverConfig s2 = cfg.build_solver_config(0.05, 8);
  std::vector<double> mins(static_cast<std::size_t>(cfg.paths));
  std::vector<double> mins_u2(static_cast<std::size_t>(cfg.paths));
  parallel_for(cfg.paths, 0, [&](int path) {
    const std::uint64_t seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(path));
    const Trajectory t1 = run(p, s1, seed);
    const Trajectory t2 = run(p, s2, seed);
    const ComparisonResult c = comparison_check(t1, t2);
    mins[static_cast<std::size_t>(path)] = c.min_diff;
    mins_u2[static_cast<std::size_t>(path)] = c.min_u2;
  });
  double worst = 1e300, worst_u2 = 1e300;
  for (int i = 0; i < cfg.paths; ++i) {
    worst = std::min(worst, mins[static_cast<std::size_t>(i)]);
    worst_u2 = std::min(worst_u2, mins_u2[static_cast<std::size_t>(i)]);
  }
  const bool pass = worst >= -1e-3 && worst_u2 >= -1e-3;
  report(6, "epsilon comparison", pass,
         "min(u_0.2 - u_0.05)=" + fmt(worst) + ", min(u_0.05)=" + fmt(worst_u2) +
             " (>= -1e-3)");
}

void criterion_7_l1_stability() {
  auto run_legs = [&](bool stochastic) {
    ExperimentConfig cfg = stochastic_base();
    cfg.T = 0.5;
    cfg.s0 = 0.6;
    if (!stochastic) {
      cfg.sigma_amplitude = 0.0;
      cfg.N0 = 0.0;
      cfg.paths = 1;
    } else {
      cfg.sigma_amplitude = 0.5;
      cfg.N0 = 0.5;
      cfg.paths = 16;
    }
    validate(cfg);
    Problem a = cfg.build_problem(8);
    Problem b = a;
    {
      const GridSpec g = cfg.grid();
      const double peak = bump::rho(0.5);
      Field xi2 = cfg.build_xi();
      for (std::size_t i = 0; i < xi2.size(); ++i) {
        double dx = node_coords(g, i)[0] - 0.5;
        dx -= std::round(dx);
        xi2.values[i] += 0.1 * bump::rho(dx / 0.2 + 0.5) / peak;
      }
      b.xi = mollified_initial(xi2, 8);
    }
    const SolverConfig sc = cfg.build_solver_config(0.1, 8);
    std::vector<std::vector<double>> curves(static_cast<std::size_t>(cfg.paths));
    parallel_for(cfg.paths, 0, [&](int path) {
      const std::uint64_t seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(path));
      const Trajectory ta = run(a, sc, seed);
      const Trajectory tb = run(b, sc, seed);
      std::vector<double> c(ta.snapshots());
      for (std::size_t s = 0; s < ta.snapshots(); ++s) {
        Field diff = ta.u[s];
        for (std::size_t i = 0; i < diff.size(); ++i) diff.values[i] -= tb.u[s].values[i];
        c[s] = lp_norm(diff, 1.0);
      }
      curves[static_cast<std::size_t>(path)] = std::move(c);
    });
    double sup_ratio = 0.0, base = 0.0;
    for (std::size_t s = 0; s < curves.front().size(); ++s) {
      double m = 0.0;
      for (const auto& c : curves) m += c[s];
      m /= static_cast<double>(cfg.paths);
      if (s == 0) base = m;
      sup_ratio = std::max(sup_ratio, m / base);
    }
    return sup_ratio;
  };
  const double det_ratio = run_legs(false);
  const double sto_ratio = run_legs(true);
  const double sto_bound = std::exp(1.0 * 0.5) * 1.1;
  const bool pass = det_ratio <= 1.02 && sto_ratio <= sto_bound;
  report(7, "L1 stability in xi", pass,
         "deterministic sup ratio=" + fmt(det_ratio) + " (<=1.02), stochastic=" +
             fmt(sto_ratio) + " (<=" + fmt(sto_bound) + ")");
}

void criterion_8_backend_cross_validation() {
  ExperimentConfig cfg = stochastic_base();
  cfg.n_axis = 128;
  cfg.galerkin_modes = 64;
  cfg.sigma_amplitude = 0.2;
  cfg.N0 = 0.3;
  cfg.obstacle = false;
  cfg.T = 0.1;
  cfg.paths = 16;
  cfg.xi_kind = "constant";  // replaced below with a bounded-away-from-zero profile
  cfg.xi_amplitude = 0.3;
  validate(cfg);
  Problem p = cfg.build_problem(8);
  p.xi = Field::sample(p.grid, [](std::array<double, 2> x) {
    return 0.3 + 0.1 * (1.0 + std::sin(2.0 * M_PI * x[0]));
  });
  const SolverConfig sf = cfg.build_solver_config(0.1, 8);
  SolverConfig sg = sf;
  sg.backend = Backend::galerkin;
  sg.galerkin_modes = 64;

  Field mean_f = Field::zeros(p.grid), mean_g = Field::zeros(p.grid);
  std::vector<Field> finals_f(static_cast<std::size_t>(cfg.paths), Field::zeros(p.grid));
  std::vector<Field> finals_g(static_cast<std::size_t>(cfg.paths), Field::zeros(p.grid));
  parallel_for(cfg.paths, 0, [&](int path) {
    const std::uint64_t seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(path));
    finals_f[static_cast<std::size_t>(path)] = run(p, sf, seed).u.back();
    finals_g[static_cast<std::size_t>(path)] = run(p, sg, seed).u.back();
  });
  for (int path = 0; path < cfg.paths; ++path)
    for (std::size_t i = 0; i < mean_f.size(); ++i) {
      mean_f.values[i] += finals_f[static_cast<std::size_t>(path)].values[i] / cfg.paths;
      mean_g.values[i] += finals_g[static_cast<std::size_t>(path)].values[i] / cfg.paths;
    }
  Field diff = mean_f;
  for (std::size_t i = 0; i < diff.size(); ++i) diff.values[i] -= mean_g.values[i];
  const double d = lp_norm(diff, 2.0);
  report(8, "fd vs galerkin mean fields", d <= 2e-2,
         "L2 distance=" + fmt(d) + " (<=2e-2)");
}

double max_positive_residual_over_family(const Trajectory& t) {
  double worst = -1e300;
  const double T = t.times.back();
  const std::vector<EntropyTestFn> etas = {EntropyTestFn(0.1), EntropyTestFn(0.01)};
  const std::vector<TimeProfile> phis = {TimeProfile::decay(0.9 * T),
                                         TimeProfile::interior(0.2 * T, 0.6 * T)};
  std::vector<Field> rhos;
  rhos.push_back(Field::constant(t.grid, 1.0));
  rhos.push_back(Field::sample(t.grid, [](std::array<double, 2> x) {
    return 1.0 + 0.5 * std::sin(2.0 * M_PI * x[0]);
  }));
  for (const auto& eta : etas)
    for (const auto& phi : phis)
      for (const auto& rho : rhos)
        worst = std::max(worst, entropy_residual(t, eta, phi, rho));
  return worst;
}

void criterion_9_entropy_residual() {
  // (a) stochastic acceptance run at full cadence
  ExperimentConfig cfg = stochastic_base();
  cfg.T = 0.05;
  cfg.snapshot_every = 1;
  cfg.paths = 4;
  validate(cfg);
  const Problem p = cfg.build_problem(8);
  const SolverConfig sc = cfg.build_solver_config(0.1, 8);
  double worst = -1e300;
  for (int path = 0; path < cfg.paths; ++path) {
    const Trajectory t =
        run(p, sc, derive_seed(cfg.base_seed, static_cast<std::uint64_t>(path)));
    worst = std::max(worst, max_positive_residual_over_family(t));
  }

  // (b) deterministic floor-regime refinement at fixed delta = 0.1
  auto residual_at = [&](int n_axis) {
    Problem q;
    q.grid = GridSpec::make(1, n_axis);
    q.porous = PorousLaw::make(2.0, 1.0);
    q.forcing = ForcingLaw{ForcingLaw::Kind::linear, 0.0, 1.0, 0.25};
    q.noise = NoiseLaw{NoiseLaw::Kind::linear, NoiseLaw::default_amplitudes(0.0, 4), 1.0, 0.25};
    q.xi = Field::sample(q.grid, [](std::array<double, 2> x) {
      return 0.06 + 0.03 * std::sin(2.0 * M_PI * x[0]);
    });
    q.s0 = 1e12;
    SolverConfig c;
    c.T = 0.02;
    c.n_reg = 4;
    c.snapshot_every = 1;
    const Trajectory t = run(q, c, 11);
    const EntropyTestFn eta(0.1);
    const TimeProfile phi = TimeProfile::decay(0.9 * c.T);
    const Field rho = Field::sample(t.grid, [](std::array<double, 2> x) {
      return 1.0 + 0.5 * std::sin(2.0 * M_PI * x[0]);
    });
    return std::abs(entropy_residual(t, eta, phi, rho));
  };
  const double e16 = residual_at(16), e32 = residual_at(32), e64 = residual_at(64);
  const SlopeFit fit = loglog_fit({1.0 / 16, 1.0 / 32, 1.0 / 64}, {e16, e32, e64});
  const bool refine_ok = !fit.degenerate && fit.slope >= 0.8;
  const bool pass = worst <= 1e-2 && refine_ok;
  report(9, "entropy residual", pass,
         "max positive residual=" + fmt(worst) + " (<=1e-2), refinement order=" +
             fmt(fit.slope) + " (>=0.8)");
}

void criterion_10_oracle_equivalence() {
  // estimators against brute-force double loops on a synthetic trajectory
  Trajectory t;
  t.grid = GridSpec::make(1, 8);
  t.dt = 0.01;
  t.steps = 8;
  t.snapshot_every = 1;
  t.epsilon = 0.25;
  t.seed = 5;
  t.reg = std::make_shared<RegularizedLaw>(PorousLaw::make(2.0, 1.0), 8);
  t.noise_law =
      NoiseLaw{NoiseLaw::Kind::linear, NoiseLaw::default_amplitudes(0.5, 4), 1.0, 0.25};
  t.forcing = ForcingLaw{ForcingLaw::Kind::linear, 0.5, 1.0, 0.25};
  t.noise = std::make_shared<NoisePath>(sample_noise(5, t.dt, 8, 4));
  std::uint64_t state = 0x12345;
  auto next_val = [&state]() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return -0.2 + 1.5 * static_cast<double>(state >> 11) * 0x1.0p-53;
  };
  for (int j = 0; j <= 8; ++j) t.obstacle.values.push_back(0.9 + 0.05 * std::sin(0.9 * j));
  t.diag.min_u = 1e300;
  for (int j = 0; j <= 8; ++j) {
    Field u = Field::zeros(t.grid);
    for (auto& v : u.values) v = next_val();
    Field nu = Field::zeros(t.grid);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double d = u.values[i] - t.obstacle.values[static_cast<std::size_t>(j)];
      nu.values[i] = d > 0.0 ? d / t.epsilon : 0.0;
    }
    t.snap_steps.push_back(j);
    t.times.push_back(j * t.dt);
    t.diag.min_u = std::min(t.diag.min_u, u.min());
    t.u.push_back(std::move(u));
    t.nu.push_back(std::move(nu));
  }

  const double h = t.grid.h, m = 2.0;
  double bf_sup_l2 = 0.0, bf_grad = 0.0, bf_pen = 0.0, bf_sup_lm1 = 0.0, bf_penw = 0.0;
  double bf_l1 = 0.0, bf_sup_pen = 0.0, bf_sko = 0.0;
  for (int j = 0; j <= 8; ++j) {
    const double S = t.obstacle.values[static_cast<std::size_t>(j)];
    double l2 = 0.0, lm1 = 0.0, pensq = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double u = t.u[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)];
      l2 += u * u * h;
      lm1 += std::pow(std::abs(u), m + 1.0) * h;
      const double over = u > S ? u - S : 0.0;
      pensq += over * over * h;
    }
    bf_sup_l2 = std::max(bf_sup_l2, l2);
    bf_sup_lm1 = std::max(bf_sup_lm1, lm1);
    bf_sup_pen = std::max(bf_sup_pen, pensq);
    if (j == 8) break;
    double grad = 0.0, penw = 0.0, l1 = 0.0, sko = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double u = t.u[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)];
      const double up =
          t.u[static_cast<std::size_t>(j)].values[static_cast<std::size_t>((i + 1) % 8)];
      const double db = (t.reg->zeta_n_bracket(up) - t.reg->zeta_n_bracket(u)) / h;
      grad += db * db * h;
      const double over = u > S ? u - S : 0.0;
      penw += over * over * std::pow(std::abs(u), m - 1.0) * h;
      l1 += t.nu[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)] * h;
      sko += (u - S) * t.nu[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)] * h;
    }
    bf_grad += grad * t.dt;
    bf_pen += pensq * t.dt;
    bf_penw += penw * t.dt;
    bf_l1 += l1 * t.dt;
    bf_sko += sko * t.dt;
  }
  const AprioriL2 a = apriori_l2_report(t, 2.0);
  const AprioriLm1 b = apriori_lm1_report(t);
  const PenaltyNorms pn = penalty_norms(t);
  auto relerr = [](double x, double y) {
    return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-300});
  };
  double worst = 0.0;
  worst = std::max(worst, relerr(a.sup_l2_pow_p, bf_sup_l2));
  worst = std::max(worst, relerr(a.grad_zeta_bracket_pow_p, bf_grad));
  worst = std::max(worst, relerr(a.penalty_l2_pow_p, bf_pen / 0.25));
  worst = std::max(worst, relerr(b.sup_lm1_pow, bf_sup_lm1));
  worst = std::max(worst, relerr(b.penalty_weighted, bf_penw / 0.25));
  worst = std::max(worst, relerr(pn.l1, bf_l1));
  worst = std::max(worst, relerr(pn.l2_sq, bf_pen));
  worst = std::max(worst, relerr(pn.sup_l2, bf_sup_pen));
  worst = std::max(worst, relerr(skorokhod_functional(t), bf_sko));

  // weak-form residual refinement on the floor-regime deterministic problem
  auto weak_err = [&](int n_axis) {
    Problem q;
    q.grid = GridSpec::make(1, n_axis);
    q.porous = PorousLaw::make(2.0, 1.0);
    q.forcing = ForcingLaw{ForcingLaw::Kind::linear, 0.0, 1.0, 0.25};
    q.noise = NoiseLaw{NoiseLaw::Kind::linear, NoiseLaw::default_amplitudes(0.0, 4), 1.0, 0.25};
    q.xi = Field::sample(q.grid, [](std::array<double, 2> x) {
      return 0.06 + 0.03 * std::sin(2.0 * M_PI * x[0]);
    });
    q.s0 = 1e12;
    SolverConfig c;
    c.T = 0.02;
    c.n_reg = 4;
    c.snapshot_every = 1;
    const Trajectory traj = run(q, c, 3);
    const Field phi = Field::sample(traj.grid, [](std::array<double, 2> x) {
      return 1.0 + 0.5 * std::sin(2.0 * M_PI * x[0]);
    });
    double worst_r = 0.0;
    for (double r : weak_residual(traj, phi)) worst_r = std::max(worst_r, r);
    return worst_r;
  };
  const SlopeFit wfit =
      loglog_fit({1.0 / 16, 1.0 / 32, 1.0 / 64}, {weak_err(16), weak_err(32), weak_err(64)});
  const bool pass = worst <= 1e-12 && !wfit.degenerate && wfit.slope >= 0.8;
  report(10, "oracle equivalence", pass,
         "max estimator deviation=" + fmt(worst) + " (<=1e-12), weak-form order=" +
             fmt(wfit.slope) + " (>=0.8)");
}

}  // namespace

int main() {
  const double t0 = now_s();
  criterion_1_regularization_contract();
  criterion_2_barenblatt_oracle();
  criterion_3_nonnegativity();
  criterion_4_penalty_scaling();
  criterion_5_uniformity();
  criterion_6_comparison();
  criterion_7_l1_stability();
  criterion_8_backend_cross_validation();
  criterion_9_entropy_residual();
  criterion_10_oracle_equivalence();
  std::printf("acceptance: %d/10 criteria passed (%.1fs)\n", 10 - g_failures, now_s() - t0);
  return g_failures;
}
