#include <cmath>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "spmo/estimators.hpp"
#include "spmo/harness/commands.hpp"
#include "spmo/harness/fit.hpp"

namespace spmo::harness {

namespace {

struct Check {
  std::string module;
  std::string name;
  bool pass;
  double margin;  // distance to the failure boundary (>= 0 when passing)
  std::string note;
};

std::vector<Check>& sink() {
  static std::vector<Check> checks;
  return checks;
}

void record_check(const std::string& module, const std::string& name, bool pass, double margin,
                  const std::string& note = "") {
  sink().push_back({module, name, pass, margin, note});
}

Field random_field(const GridSpec& g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Field f = Field::zeros(g);
  for (double& v : f.values) v = dist(eng);
  return f;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// --------------------------- grid checks ----------------------------------

void check_grid() {
  for (int dim : {1, 2}) {
    const GridSpec g = GridSpec::make(dim, dim == 1 ? 37 : 12);
    const Field f = random_field(g, 11 + dim);
    const Field gg = random_field(g, 29 + dim);
    const Field lf = laplacian(f);
    double hd = g.h;
    if (dim == 2) hd *= g.h;
    double lhs = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) lhs += lf.values[i] * gg.values[i];
    lhs *= hd;
    double rhs = 0.0;
    for (int a = 0; a < dim; ++a) {
      const Field df = forward_diff(f, a), dg = forward_diff(gg, a);
      for (std::size_t i = 0; i < f.size(); ++i) rhs += df.values[i] * dg.values[i];
    }
    rhs *= -hd;
    const double defect = rel(lhs, rhs);
    record_check("torus_grid", "summation_by_parts_d" + std::to_string(dim), defect <= 1e-12,
                 1e-12 - defect);

    const double drift = std::abs(mass(lf)) / std::max(1.0, lp_norm(lf, 1.0));
    record_check("torus_grid", "laplacian_mean_zero_d" + std::to_string(dim), drift <= 1e-12,
                 1e-12 - drift);

    const MollifierSpec ms{8.0 * g.h};
    const Field mf = mollify(f, ms);
    const double mdef = rel(mass(mf), mass(f));
    record_check("torus_grid", "mollify_mass_d" + std::to_string(dim), mdef <= 1e-10,
                 1e-10 - mdef);
    Field above = f;
    for (double& v : above.values) v += 0.3;
    const Field ma = mollify(above, ms);
    double order_margin = 1e300;
    for (std::size_t i = 0; i < f.size(); ++i)
      order_margin = std::min(order_margin, ma.values[i] - mf.values[i]);
    record_check("torus_grid", "mollify_order_preserving_d" + std::to_string(dim),
                 order_margin >= -1e-14, order_margin);
  }

  const GridSpec g1 = GridSpec::make(1, 64);
  const Field f = random_field(g1, 77, -2.0, 2.0);
  double worst = 1e300;
  const double ps[] = {1.0, 1.5, 2.0, 3.0, 4.0};
  for (int i = 0; i < 4; ++i)
    worst = std::min(worst, lp_norm(f, ps[i + 1]) + 1e-12 - lp_norm(f, ps[i]));
  record_check("torus_grid", "lp_norm_monotone_in_p", worst >= 0.0, worst);

  // bump profile: range, support, unit mass
  double mx = 0.0, mass_q = 0.0;
  const int cells = 4096;
  for (int j = 0; j < cells; ++j) {
    const double a = static_cast<double>(j) / cells;
    const double b = a + 1.0 / cells;
    mass_q += (bump::rho(a) + 4.0 * bump::rho(0.5 * (a + b)) + bump::rho(b)) / (6.0 * cells);
    mx = std::max(mx, bump::rho(0.5 * (a + b)));
  }
  const bool range_ok = mx <= 2.0 && bump::rho(-0.1) == 0.0 && bump::rho(1.1) == 0.0;
  record_check("torus_grid", "bump_range_and_support", range_ok, 2.0 - mx);
  record_check("torus_grid", "bump_unit_mass", std::abs(mass_q - 1.0) <= 1e-6,
               1e-6 - std::abs(mass_q - 1.0));
}

// ------------------------ coefficients checks ------------------------------

void check_coefficients() {
  const int ns[] = {2, 4, 8, 16, 64};
  double floor_margin = 1e300, close_margin = 1e300, sup_margin = 1e300, odd_margin = 1e300;
  for (double m : {2.0, 3.0}) {
    const PorousLaw law = PorousLaw::make(m, 1.0);
    for (int n : ns) {
      const RegularizedLaw reg(law, n);
      double prev = -1e300;
      for (int i = 0; i <= 10000; ++i) {
        const double r = -static_cast<double>(n) + 2.0 * n * i / 10000.0;
        const double zn = reg.zeta_n(r);
        floor_margin = std::min(floor_margin, zn - 2.0 / n);
        close_margin = std::min(close_margin, 4.0 / n - std::abs(law.zeta(r) - zn));
        sup_margin = std::min(sup_margin,
                              std::pow(std::max(law.zeta(n), 2.0 / n), 2) + 1.0 - zn * zn);
        odd_margin = std::min(odd_margin, 1e-12 - std::abs(reg.phi_n(-r) + reg.phi_n(r)));
        const double p = reg.phi_n(r);
        if (i > 0 && p <= prev) odd_margin = std::min(odd_margin, p - prev);
        prev = p;
      }
    }
  }
  record_check("coefficients", "zeta_n_floor_2_over_n", floor_margin >= -1e-15, floor_margin);
  record_check("coefficients", "zeta_n_within_4_over_n", close_margin >= 0.0, close_margin);
  record_check("coefficients", "zeta_n_sq_bounded", sup_margin >= 0.0, sup_margin);
  record_check("coefficients", "phi_n_odd_increasing", odd_margin >= 0.0, odd_margin);

  {
    const PorousLaw law = PorousLaw::make(2.0, 1.0);
    double km = 1e300;
    for (int i = 0; i <= 1000; ++i) {
      const double r = 1.0 + 9.0 * i / 1000.0;
      km = std::min(km, law.K * law.zeta(r) - 1.0);
    }
    record_check("coefficients", "K_zeta_indicator_m2", km >= 0.0, km);
  }

  {
    double worst = 1e300;
    for (double delta : {1e-1, 1e-2, 1e-3}) {
      const EntropyTestFn eta(delta);
      worst = std::min(worst, 1e-12 - std::abs(eta.value(0.0)));
      worst = std::min(worst, 1e-12 - std::abs(eta.d1(0.0)));
      double q = 0.0;
      for (int i = 0; i <= 2000; ++i) {
        const double r = -2.0 * delta + 4.0 * delta * i / 2000.0;
        worst = std::min(worst, delta - std::abs(eta.value(r) - std::max(r, 0.0)));
        worst = std::min(worst, eta.d2(r));
        worst = std::min(worst, 2.0 / delta - eta.d2(r));
        if (r < 0.0 || r > delta) worst = std::min(worst, 1e-300 - std::abs(eta.d2(r)));
        q += eta.d2(r) * (4.0 * delta / 2000.0);
      }
      worst = std::min(worst, 2.0 - q);
    }
    record_check("coefficients", "eta_delta_invariants", worst >= -1e-12, worst);
  }

  {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    double worst = 1e300;
    for (auto kind : {NoiseLaw::Kind::linear, NoiseLaw::Kind::holder}) {
      const NoiseLaw law{kind, NoiseLaw::default_amplitudes(0.5, 8), 1.0, 0.25};
      const double a2 = std::sqrt(law.amp_sq_sum());
      for (int i = 0; i < 2000; ++i) {
        const double r = dist(eng), s = dist(eng);
        const double lhs = a2 * std::abs(law.shape(r) - law.shape(s));
        const double d = std::abs(r - s);
        worst = std::min(worst, law.K * (std::pow(d, 0.5 + law.kappa) + d) - lhs);
        worst = std::min(worst, law.K * (1.0 + std::abs(r)) - a2 * std::abs(law.shape(r)));
      }
      worst = std::min(worst, std::abs(a2 * law.shape(0.0)));
    }
    record_check("coefficients", "sigma_holder_and_linear_growth", worst >= -1e-12, worst);
  }

  {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    double worst = 1e300;
    for (auto kind : {ForcingLaw::Kind::linear, ForcingLaw::Kind::linear_plus_spatial}) {
      const ForcingLaw law{kind, 0.5, 1.0, 0.25};
      for (int i = 0; i < 2000; ++i) {
        const std::array<double, 2> x{std::abs(dist(eng)) / 3.0, 0.0};
        const double r1 = dist(eng), r2 = dist(eng);
        worst = std::min(worst, 1e-300 - std::abs(law(0.3, x, 0.0)));
        const double lip = std::abs(law(0.3, x, r1) - law(0.3, x, r2));
        worst = std::min(worst, (law.N0 + law.K) * std::abs(r1 - r2) + 1e-12 - lip);
      }
    }
    record_check("coefficients", "forcing_vanishes_and_lipschitz", worst >= -1e-12, worst);
  }

  {
    const PenaltyLaw pen = PenaltyLaw::make(0.5);
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    double worst = 1e300;
    for (int i = 0; i < 1000; ++i) {
      const double r1 = dist(eng), r2 = dist(eng), s = dist(eng);
      worst = std::min(worst, pen(r1, s));
      if (r1 <= s) worst = std::min(worst, 1e-300 - pen(r1, s));
      const double lip = std::abs(pen(r1, s) - pen(r2, s));
      worst = std::min(worst, std::abs(r1 - r2) / pen.epsilon + 1e-12 - lip);
    }
    record_check("coefficients", "penalty_sign_and_lipschitz", worst >= -1e-12, worst);
  }

  {
    // d/dx [zeta f](u(x)) == f(u) d/dx [zeta](u(x)) at second order.
    const PorousLaw law = PorousLaw::make(2.0, 1.0);
    auto f = [](double r) { return 1.0 / (1.0 + r * r); };
    auto u = [](double x) { return 0.6 + 0.3 * std::sin(2.0 * M_PI * x); };
    auto zf_of_x = [&](double x) {
      return bracket([&](double s) { return law.zeta(s) * f(s); }, u(x));
    };
    auto err_at = [&](double h) {
      double worst = 0.0;
      for (int i = 0; i < 40; ++i) {
        const double x = 0.012 + i * 0.024;
        const double lhs = (zf_of_x(x + h) - zf_of_x(x - h)) / (2.0 * h);
        const double rhs =
            f(u(x)) * (law.zeta_bracket(u(x + h)) - law.zeta_bracket(u(x - h))) / (2.0 * h);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
      return worst;
    };
    const double e1 = err_at(2e-3), e2 = err_at(1e-3);
    const double order = std::log2(e1 / e2);
    record_check("coefficients", "chain_rule_identity_order2", order >= 1.5, order - 1.5,
                 "measured order " + std::to_string(order));
  }

  {
    const PorousLaw law = PorousLaw::make(2.0, 1.0);
    double worst = 1e300;
    for (double r : {0.25, 1.0, 2.5, -1.5}) {
      const double q = bracket([&](double s) { return law.zeta(s); }, r);
      worst = std::min(worst, 1e-9 - rel(q, law.zeta_bracket(r)));
    }
    record_check("coefficients", "bracket_quadrature_matches_closed_form", worst >= 0.0, worst);
  }
}

// ------------------------- stochastic checks -------------------------------

void check_stochastic() {
  const NoisePath a = sample_noise(42, 1e-3, 512, 4);
  const NoisePath b = sample_noise(42, 1e-3, 512, 4);
  record_check("stochastic", "noise_bit_identical_regeneration", a.increments == b.increments,
               a.increments == b.increments ? 1.0 : -1.0);

  const NoisePath wide = sample_noise(42, 1e-3, 512, 8);
  bool stable = true;
  for (int j = 0; j < 512; ++j)
    for (int k = 0; k < 4; ++k)
      stable &= (a.increments[static_cast<std::size_t>(j) * 4 + k] ==
                 wide.increments[static_cast<std::size_t>(j) * 8 + k]);
  record_check("stochastic", "mode_streams_stable_under_extension", stable, stable ? 1.0 : -1.0);

  const NoisePath big = sample_noise(99, 1e-3, 10000, 1);
  double meanv = 0.0, var = 0.0;
  for (double x : big.increments) meanv += x;
  meanv /= 10000.0;
  for (double x : big.increments) var += (x - meanv) * (x - meanv);
  var /= 9999.0;
  const double var_margin = std::min(var - 0.8e-3, 1.2e-3 - var);
  record_check("stochastic", "increment_variance_within_20pct", var_margin >= 0.0, var_margin,
               "sample var " + std::to_string(var));
  const double mean_bound = 4.0 * std::sqrt(1e-3 / 10000.0);
  record_check("stochastic", "increment_mean_near_zero", std::abs(meanv) <= mean_bound,
               mean_bound - std::abs(meanv));

  {
    const NoiseLaw off{NoiseLaw::Kind::linear, {0.0}, 1.0, 0.25};
    const NoisePath p = sample_noise(7, 1e-3, 500, 1);
    const ObstaclePath s = integrate_obstacle(1.0, 0.0, p, off);
    double dev = 0.0;
    for (double v : s.values) dev = std::max(dev, std::abs(v - 1.0));
    record_check("stochastic", "constant_barrier_when_sigma_zero",
                 dev == 0.0 && s.clamp_count == 0, -dev);
  }
  {
    const NoiseLaw off{NoiseLaw::Kind::linear, {0.0}, 1.0, 0.25};
    const NoisePath p = sample_noise(7, 0.5 / 1000, 1000, 1);
    const ObstaclePath s = integrate_obstacle(1.0, 2.0, p, off);
    const double dev = std::abs(s.values.back() - 2.0);
    record_check("stochastic", "linear_drift_exact", dev <= 1e-12, 1e-12 - dev);
  }
  {
    const NoiseLaw law{NoiseLaw::Kind::linear, {0.3}, 1.0, 0.25};
    double acc = 0.0, acc2 = 0.0;
    const int paths = 1000;
    for (int p = 0; p < paths; ++p) {
      const NoisePath np = sample_noise(derive_seed(1234, static_cast<std::uint64_t>(p)),
                                        1e-3, 250, 1);
      const double st = integrate_obstacle(1.0, 0.0, np, law).values.back();
      acc += st;
      acc2 += st * st;
    }
    const double m = acc / paths;
    const double sd = std::sqrt((acc2 / paths - m * m) / paths);
    record_check("stochastic", "martingale_mean_within_3se", std::abs(m - 1.0) <= 3.0 * sd,
                 3.0 * sd - std::abs(m - 1.0), "mean " + std::to_string(m));
  }
}

// --------------------------- solver checks ---------------------------------

Problem tiny_problem(int n_axis, double xi_const, double s0, double amp) {
  Problem p;
  p.grid = GridSpec::make(1, n_axis);
  p.porous = PorousLaw::make(2.0, 1.0);
  p.forcing = ForcingLaw{ForcingLaw::Kind::linear, 0.5, 1.0, 0.25};
  p.noise = NoiseLaw{NoiseLaw::Kind::linear, NoiseLaw::default_amplitudes(amp, 4), 1.0, 0.25};
  p.xi = Field::constant(p.grid, xi_const);
  p.s0 = s0;
  p.h_s = 0.0;
  return p;
}

void check_solver() {
  {
    double worst = 1e300;
    worst = std::min(worst, 1e-300 - std::abs(resolve_penalty_implicit(0.5, 1.0, 0.1, 0.1) - 0.5));
    worst = std::min(worst, 1e-300 - std::abs(resolve_penalty_implicit(2.0, 1.0, 0.1, 0.1) - 1.5));
    std::mt19937_64 eng(17);
    std::uniform_real_distribution<double> dist(-2.0, 3.0);
    double prev_u = -1e300, prev_rhs = -1e300;
    std::vector<double> rhs_samples;
    for (int i = 0; i < 500; ++i) rhs_samples.push_back(dist(eng));
    std::sort(rhs_samples.begin(), rhs_samples.end());
    for (double rhs : rhs_samples) {
      const double u = resolve_penalty_implicit(rhs, 1.0, 0.05, 0.1);
      if (prev_rhs > -1e299 && u < prev_u) worst = std::min(worst, u - prev_u);
      if (rhs > 1.0) {
        worst = std::min(worst, u - 1.0);
        worst = std::min(worst, rhs - u);
      }
      prev_u = u;
      prev_rhs = rhs;
    }
    record_check("solver", "penalty_resolvent_closed_form_monotone", worst >= -1e-15, worst);
  }
  {
    std::mt19937_64 eng(19);
    std::uniform_real_distribution<double> dist(-1.0, 3.0);
    double worst = 1e300, bound_dev = 0.0;
    for (int i = 0; i < 500; ++i) {
      const double rhs = dist(eng), S = dist(eng);
      const double u1 = resolve_penalty_implicit(rhs, S, 0.02, 0.2);
      const double u2 = resolve_penalty_implicit(rhs, S, 0.02, 0.05);
      worst = std::min(worst, u1 - u2);
      const double over = std::max(u2 - S, 0.0);
      bound_dev = std::max(bound_dev,
                           std::abs(over - std::max(rhs - S, 0.0) / (1.0 + 0.02 / 0.05)));
    }
    record_check("solver", "one_step_epsilon_comparison", worst >= 0.0, worst);
    record_check("solver", "overshoot_bound_exact", bound_dev <= 1e-14, 1e-14 - bound_dev);
  }
  {
    Problem p = tiny_problem(32, 0.0, 1e12, 0.0);
    p.forcing.N0 = 0.0;
    p.xi = Field::sample(p.grid, [](std::array<double, 2> x) {
      return 0.4 + 0.3 * std::sin(2.0 * M_PI * x[0]);
    });
    SolverConfig sc;
    sc.T = 0.002;
    sc.epsilon = 0.1;
    sc.n_reg = 4;
    sc.snapshot_every = 1;
    const Trajectory t = run(p, sc, 3);
    double worst = 0.0;
    const double m0 = mass(t.u.front());
    for (const auto& u : t.u) worst = std::max(worst, rel(mass(u), m0));
    record_check("solver", "mass_conservation_pure_diffusion", worst <= 1e-12, 1e-12 - worst);
  }
  {
    Problem p = tiny_problem(32, 0.0, 1.0, 0.5);
    SolverConfig sc;
    sc.T = 0.01;
    sc.n_reg = 4;
    const Trajectory t = run(p, sc, 5);
    record_check("solver", "zero_initial_datum_stays_zero", t.diag.max_abs_u == 0.0,
                 -t.diag.max_abs_u);
  }
  {
    const GridSpec g = GridSpec::make(1, 64);
    const RegularizedLaw reg(PorousLaw::make(2.0, 1.0), 4);
    const double v = cfl_dt(g, reg);
    const double expect = (1.0 / 4096.0) / 16.0;
    const RegularizedLaw reg2(PorousLaw::make(2.0, 1.0), 8);  // sup Phi' doubles
    const double halves = cfl_dt(g, reg2) / v;
    const bool ok = rel(v, expect) <= 1e-12 && std::abs(halves - 0.5) <= 1e-12;
    record_check("solver", "cfl_formula_and_proportionality", ok, 1e-12 - rel(v, expect));
  }
  {
    // floor-regime heat equation: fd and galerkin agree to high order
    Problem p = tiny_problem(64, 0.0, 1e12, 0.0);
    p.forcing.N0 = 0.0;
    p.xi = Field::sample(p.grid, [](std::array<double, 2> x) {
      return 0.05 + 0.02 * std::sin(2.0 * M_PI * x[0]);
    });
    SolverConfig sc;
    sc.T = 0.01;
    sc.n_reg = 4;
    sc.snapshot_every = 1 << 20;
    const Trajectory tf = run(p, sc, 9);
    SolverConfig sg = sc;
    sg.backend = Backend::galerkin;
    sg.galerkin_modes = 32;
    const Trajectory tg = run(p, sg, 9);
    Field diff = tf.u.back();
    for (std::size_t i = 0; i < diff.size(); ++i) diff.values[i] -= tg.u.back().values[i];
    const double d = lp_norm(diff, 2.0);
    record_check("solver", "fd_galerkin_floor_regime_agreement", d <= 1e-4, 1e-4 - d,
                 "L2 distance " + std::to_string(d));
  }
  {
    Problem p = tiny_problem(32, 0.3, 0.5, 0.4);
    SolverConfig sc;
    sc.T = 0.005;
    sc.n_reg = 4;
    sc.snapshot_every = 1;
    const Trajectory t1 = run(p, sc, 21);
    const Trajectory t2 = run(p, sc, 21);
    bool same = t1.snapshots() == t2.snapshots();
    for (std::size_t s = 0; same && s < t1.snapshots(); ++s)
      same &= (t1.u[s].values == t2.u[s].values);
    same &= (t1.obstacle.values == t2.obstacle.values);
    record_check("solver", "trajectory_bit_identical_rerun", same, same ? 1.0 : -1.0);
  }
}

// ------------------------- estimator checks --------------------------------

Trajectory synthetic_trajectory(std::uint64_t seed, double eps, int steps = 8, int n_axis = 8) {
  Trajectory t;
  t.grid = GridSpec::make(1, n_axis);
  t.dt = 0.01;
  t.steps = steps;
  t.snapshot_every = 1;
  t.epsilon = eps;
  t.seed = seed;
  t.reg = std::make_shared<RegularizedLaw>(PorousLaw::make(2.0, 1.0), 8);
  t.noise_law =
      NoiseLaw{NoiseLaw::Kind::linear, NoiseLaw::default_amplitudes(0.5, 4), 1.0, 0.25};
  t.forcing = ForcingLaw{ForcingLaw::Kind::linear, 0.5, 1.0, 0.25};
  auto noise = std::make_shared<NoisePath>(sample_noise(seed, t.dt, steps, 4));
  t.noise = noise;
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> dist(-0.2, 1.2);
  t.obstacle.s0 = 0.9;
  for (int j = 0; j <= steps; ++j)
    t.obstacle.values.push_back(0.9 + 0.05 * std::sin(0.7 * j));
  for (int j = 0; j <= steps; ++j) {
    t.snap_steps.push_back(j);
    t.times.push_back(j * t.dt);
    Field u = Field::zeros(t.grid);
    for (double& v : u.values) v = dist(eng);
    Field nu = Field::zeros(t.grid);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double d = u.values[i] - t.obstacle.values[static_cast<std::size_t>(j)];
      nu.values[i] = d > 0.0 ? d / eps : 0.0;
    }
    t.u.push_back(std::move(u));
    t.nu.push_back(std::move(nu));
    t.diag.min_u = std::min(t.diag.min_u, t.u.back().min());
  }
  return t;
}

void check_estimators() {
  const Trajectory t = synthetic_trajectory(31, 0.25);
  const double h = t.grid.h;
  const double m = t.reg->base().m;
  const int N = static_cast<int>(t.steps);
  const int nx = t.grid.n_axis;

  // Brute-force double loops, written independently of the estimator code.
  double bf_sup_l2 = 0.0, bf_grad = 0.0, bf_pen2 = 0.0, bf_sup_lm1 = 0.0, bf_penw = 0.0;
  double bf_l1 = 0.0, bf_sup_pen = 0.0, bf_sko = 0.0;
  for (int j = 0; j <= N; ++j) {
    double l2 = 0.0, lm1 = 0.0, pen = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double u = t.u[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)];
      l2 += u * u * h;
      lm1 += std::pow(std::abs(u), m + 1.0) * h;
      const double over = u - t.obstacle.values[static_cast<std::size_t>(j)];
      if (over > 0.0) pen += over * over * h;
    }
    bf_sup_l2 = std::max(bf_sup_l2, l2);
    bf_sup_lm1 = std::max(bf_sup_lm1, lm1);
    bf_sup_pen = std::max(bf_sup_pen, pen);
    if (j == N) break;
    double grad = 0.0, penw = 0.0, l1 = 0.0, sko = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double u = t.u[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)];
      const double un =
          t.u[static_cast<std::size_t>(j)].values[static_cast<std::size_t>((i + 1) % nx)];
      const double db = (t.reg->zeta_n_bracket(un) - t.reg->zeta_n_bracket(u)) / h;
      grad += db * db * h;
      const double S = t.obstacle.values[static_cast<std::size_t>(j)];
      const double over = u - S;
      if (over > 0.0) penw += over * over * std::pow(std::abs(u), m - 1.0) * h;
      const double nu = t.nu[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)];
      l1 += nu * h;
      sko += (u - S) * nu * h;
    }
    bf_grad += grad * t.dt;
    bf_pen2 += t.dt * [&] {
      double pen = 0.0;
      for (int i = 0; i < nx; ++i) {
        const double u = t.u[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(i)];
        const double over = u - t.obstacle.values[static_cast<std::size_t>(j)];
        if (over > 0.0) pen += over * over * h;
      }
      return pen;
    }();
    bf_penw += penw * t.dt;
    bf_l1 += l1 * t.dt;
    bf_sko += sko * t.dt;
  }

  const double p = 2.0;
  const AprioriL2 a = apriori_l2_report(t, p);
  const AprioriLm1 b = apriori_lm1_report(t);
  const PenaltyNorms pn = penalty_norms(t);
  const double sko = skorokhod_functional(t);
  double worst = 1e300;
  worst = std::min(worst, 1e-12 - rel(a.sup_l2_pow_p, std::pow(std::sqrt(bf_sup_l2), p)));
  worst = std::min(worst, 1e-12 - rel(a.grad_zeta_bracket_pow_p, std::pow(bf_grad, p / 2)));
  worst = std::min(worst, 1e-12 - rel(a.penalty_l2_pow_p, std::pow(bf_pen2 / 0.25, p / 2)));
  worst = std::min(worst, 1e-12 - rel(b.sup_lm1_pow, bf_sup_lm1));
  worst = std::min(worst, 1e-12 - rel(b.penalty_weighted, bf_penw / 0.25));
  worst = std::min(worst, 1e-12 - rel(pn.l1, bf_l1));
  worst = std::min(worst, 1e-12 - rel(pn.l2_sq, bf_pen2));
  worst = std::min(worst, 1e-12 - rel(pn.sup_l2, bf_sup_pen));
  worst = std::min(worst, 1e-12 - rel(sko, bf_sko));
  record_check("estimators", "brute_force_oracle_equivalence", worst >= 0.0, worst);

  const double identity_dev = rel(sko, pn.l2_sq / t.epsilon);
  record_check("estimators", "skorokhod_equals_eps_penalty_l2", identity_dev <= 1e-12,
               1e-12 - identity_dev);

  {
    // permuting equal-amplitude noise modes leaves the entropy residual unchanged
    Trajectory t2 = synthetic_trajectory(47, 0.25);
    NoiseLaw eq{NoiseLaw::Kind::linear, {0.2, 0.2, 0.2, 0.2}, 1.0, 0.25};
    t2.noise_law = eq;
    auto permuted = std::make_shared<NoisePath>(*t2.noise);
    for (int j = 0; j < permuted->steps; ++j) {
      auto* row = permuted->increments.data() + static_cast<std::size_t>(j) * 4;
      std::swap(row[0], row[3]);
      std::swap(row[1], row[2]);
    }
    const EntropyTestFn eta(0.1);
    const TimeProfile phi = TimeProfile::decay(0.9 * t2.times.back());
    const Field rho_s = Field::constant(t2.grid, 1.0);
    const double r1 = entropy_residual(t2, eta, phi, rho_s);
    t2.noise = permuted;
    const double r2 = entropy_residual(t2, eta, phi, rho_s);
    record_check("estimators", "mode_permutation_invariance", r1 == r2,
                 -std::abs(r1 - r2));
  }

  {
    // mutation smoke test: a sign-flipped penalty must break the comparison
    auto broken_resolve = [](double rhs, double S, double dt, double eps) {
      const double over = std::max(rhs - S, 0.0);
      return rhs + (dt / eps) * over;  // pushes the wrong way
    };
    double min_diff = 1e300;
    std::mt19937_64 eng(53);
    std::uniform_real_distribution<double> dist(0.0, 2.0);
    for (int i = 0; i < 200; ++i) {
      const double rhs = 1.0 + dist(eng);
      const double u1 = broken_resolve(rhs, 1.0, 0.02, 0.2);
      const double u2 = broken_resolve(rhs, 1.0, 0.02, 0.05);
      min_diff = std::min(min_diff, u1 - u2);
    }
    record_check("estimators", "mutation_smoke_flipped_penalty_detected", min_diff < 0.0,
                 -min_diff, "comparison margin under fault: " + std::to_string(min_diff));
  }
}

// --------------------------- harness checks --------------------------------

void check_harness() {
  const std::string text =
      "[problem]\nm = 2\nxi = constant\nxi_amplitude = 0.4\ns0 = 1.0\nT = 0.01\n"
      "sigma = linear\nsigma_amplitude = 0.3\n"
      "[discretization]\nd = 1\nn_axis = 16\nsnapshot_every = 2\n"
      "[penalty]\nepsilon = 0.1\nn_reg = 4\n"
      "[monte_carlo]\npaths = 6\nbase_seed = 11\n";
  ExperimentConfig c1 = parse_config_text(text);
  ExperimentConfig c2 = parse_config_text(text);
  bool ok = c1.semantic_hash() == c2.semantic_hash();
  ExperimentConfig c3 = c1;
  c3.m = 2.5;
  ok &= (c3.semantic_hash() != c1.semantic_hash());
  ExperimentConfig c4 = c1;
  c4.directory = "elsewhere";
  ok &= (c4.semantic_hash() == c1.semantic_hash());
  record_check("harness", "config_hash_semantic_sensitivity", ok, ok ? 1.0 : -1.0);

  {
    RunRecord r;
    r.config_hash = c1.semantic_hash();
    r.seed = 17;
    r.path_index = 3;
    r.epsilon = 0.1;
    r.n_reg = 4;
    r.report.sup_l2_pow_p = 0.123456789012345;
    r.report.skorokhod = -1e-7;
    r.diag.steps = 99;
    r.wall_ms = 12.0;
    const std::string line = to_json_line(r);
    const RunRecord back = record_from_json(line);
    record_check("harness", "record_roundtrip", to_json_line(back) == line,
                 to_json_line(back) == line ? 1.0 : -1.0);
  }

  {
    const auto rec1 = execute_grid(c1, 1);
    const auto rec3 = execute_grid(c1, 3);
    bool same = rec1.size() == rec3.size();
    for (std::size_t i = 0; same && i < rec1.size(); ++i)
      same &= same_up_to_wallclock(rec1[i], rec3[i]);
    record_check("harness", "ensemble_invariant_under_workers", same, same ? 1.0 : -1.0);
  }
}

}  // namespace

int cmd_verify(int workers) {
  (void)workers;
  sink().clear();
  check_grid();
  check_coefficients();
  check_stochastic();
  check_solver();
  check_estimators();
  check_harness();

  int failures = 0;
  std::cout << "invariant suite (" << sink().size() << " checks)\n";
  for (const auto& c : sink()) {
    std::cout << (c.pass ? "  [PASS] " : "  [FAIL] ") << std::left << std::setw(14) << c.module
              << ' ' << std::setw(42) << c.name << " margin=" << std::scientific
              << std::setprecision(3) << c.margin << std::defaultfloat;
    if (!c.note.empty()) std::cout << "  (" << c.note << ')';
    std::cout << '\n';
    if (!c.pass) ++failures;
  }
  if (failures) {
    std::cout << failures << " check(s) failed\n";
    return 1;
  }
  std::cout << "all invariants hold\n";
  return 0;
}

}  // namespace spmo::harness
