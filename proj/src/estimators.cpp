#include "spmo/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace spmo {

namespace {

double cell_volume(const GridSpec& g) {
  double hd = g.h;
  if (g.dim == 2) hd *= g.h;
  return hd;
}

double snap_weight(const Trajectory& traj, std::size_t s) {
  // Width of the left-endpoint time cell anchored at snapshot s.
  return traj.times[s + 1] - traj.times[s];
}

double positive_part_sq_integral(const Field& u, double S) {
  double acc = 0.0;
  for (double v : u.values) {
    const double d = v - S;
    if (d > 0.0) acc += d * d;
  }
  return acc * cell_volume(u.grid);
}

}  // namespace

AprioriL2 apriori_l2_report(const Trajectory& traj, double p) {
  if (p < 2.0) throw std::invalid_argument("apriori_l2_report: p must be >= 2");
  double sup_l2 = 0.0, grad_acc = 0.0, pen_acc = 0.0;
  for (std::size_t s = 0; s < traj.snapshots(); ++s) {
    sup_l2 = std::max(sup_l2, lp_norm(traj.u[s], 2.0));
    if (s + 1 == traj.snapshots()) break;
    const double w = snap_weight(traj, s);
    Field zb = Field::zeros(traj.grid);
    for (std::size_t i = 0; i < zb.size(); ++i)
      zb.values[i] = traj.reg->zeta_n_bracket(traj.u[s].values[i]);
    grad_acc += w * gradient_sq_integral(zb);
    const double S_j = traj.obstacle.values[static_cast<std::size_t>(traj.snap_steps[s])];
    pen_acc += w * positive_part_sq_integral(traj.u[s], S_j);
  }
  AprioriL2 r;
  r.sup_l2_pow_p = std::pow(sup_l2, p);
  r.grad_zeta_bracket_pow_p = std::pow(grad_acc, 0.5 * p);
  r.penalty_l2_pow_p = std::pow(pen_acc / traj.epsilon, 0.5 * p);
  return r;
}

AprioriLm1 apriori_lm1_report(const Trajectory& traj) {
  const double m = traj.reg->base().m;
  double sup_lm1 = 0.0, pen_acc = 0.0;
  const double hd = cell_volume(traj.grid);
  for (std::size_t s = 0; s < traj.snapshots(); ++s) {
    sup_lm1 = std::max(sup_lm1, lp_norm(traj.u[s], m + 1.0));
    if (s + 1 == traj.snapshots()) break;
    const double w = snap_weight(traj, s);
    const double S_j = traj.obstacle.values[static_cast<std::size_t>(traj.snap_steps[s])];
    double cell = 0.0;
    for (double v : traj.u[s].values) {
      const double d = v - S_j;
      if (d > 0.0) cell += d * d * std::pow(std::abs(v), m - 1.0);
    }
    pen_acc += w * cell * hd;
  }
  AprioriLm1 r;
  r.sup_lm1_pow = std::pow(sup_lm1, m + 1.0);
  r.penalty_weighted = pen_acc / traj.epsilon;
  return r;
}

PenaltyNorms penalty_norms(const Trajectory& traj) {
  const double hd = cell_volume(traj.grid);
  PenaltyNorms r{0.0, 0.0, 0.0};
  for (std::size_t s = 0; s < traj.snapshots(); ++s) {
    double sq = 0.0, l1 = 0.0;
    for (double v : traj.nu[s].values) {
      l1 += v;
      const double pos = v * traj.epsilon;  // (u - S)^+ = eps * nu
      sq += pos * pos;
    }
    sq *= hd;
    l1 *= hd;
    r.sup_l2 = std::max(r.sup_l2, sq);
    if (s + 1 == traj.snapshots()) break;
    const double w = snap_weight(traj, s);
    r.l1 += w * l1;
    r.l2_sq += w * sq;
  }
  return r;
}

double skorokhod_functional(const Trajectory& traj) {
  const double hd = cell_volume(traj.grid);
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < traj.snapshots(); ++s) {
    const double S_j = traj.obstacle.values[static_cast<std::size_t>(traj.snap_steps[s])];
    const double w = snap_weight(traj, s);
    double cell = 0.0;
    for (std::size_t i = 0; i < traj.u[s].size(); ++i)
      cell += (traj.u[s].values[i] - S_j) * traj.nu[s].values[i];
    acc += w * cell * hd;
  }
  return acc;
}

EstimateReport estimate_all(const Trajectory& traj, double p) {
  EstimateReport rep;
  rep.p = p;
  const AprioriL2 a = apriori_l2_report(traj, p);
  rep.sup_l2_pow_p = a.sup_l2_pow_p;
  rep.grad_zeta_bracket_pow_p = a.grad_zeta_bracket_pow_p;
  rep.penalty_l2_pow_p = a.penalty_l2_pow_p;
  const AprioriLm1 b = apriori_lm1_report(traj);
  rep.sup_lm1_pow = b.sup_lm1_pow;
  rep.penalty_weighted = b.penalty_weighted;
  const PenaltyNorms pn = penalty_norms(traj);
  rep.penalty_l1 = pn.l1;
  rep.penalty_l2_sq_scaled = pn.l2_sq / (traj.epsilon * traj.epsilon);
  rep.penalty_sup_scaled = pn.sup_l2 / traj.epsilon;
  rep.skorokhod = skorokhod_functional(traj);
  rep.min_u = traj.diag.min_u;
  rep.max_overshoot = traj.diag.max_overshoot;
  double grad_phi = 0.0;
  for (std::size_t s = 0; s + 1 < traj.snapshots(); ++s) {
    Field q = Field::zeros(traj.grid);
    for (std::size_t i = 0; i < q.size(); ++i)
      q.values[i] = traj.reg->phi_n(traj.u[s].values[i]);
    grad_phi += snap_weight(traj, s) * gradient_sq_integral(q);
  }
  rep.grad_phi_sq = grad_phi;
  return rep;
}

TimeProfile TimeProfile::decay(double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("TimeProfile: tau must be positive");
  return TimeProfile(Kind::decay, tau, 0.0);
}

TimeProfile TimeProfile::interior(double t0, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("TimeProfile: width must be positive");
  return TimeProfile(Kind::interior, t0, width);
}

double TimeProfile::value(double t) const {
  if (kind_ == Kind::decay) return 1.0 - bump::cdf(t / a_);
  return bump::rho((t - a_) / b_);
}

double TimeProfile::deriv(double t) const {
  if (kind_ == Kind::decay) return -bump::rho(t / a_) / a_;
  return bump::rho_prime((t - a_) / b_) / b_;
}

ZetaSqEtaBracket::ZetaSqEtaBracket(const RegularizedLaw& reg, const EntropyTestFn& eta)
    : reg_(&reg), delta_(eta.delta()), reflected_(eta.is_reflected()) {
  // Cumulative integral of zeta_n^2 eta' from 0 over the eta'' support hull
  // ([0, delta] standard, [-delta, 0] reflected); table index 0 sits at 0 and
  // the last index at the far end of the hull.
  const double sign = reflected_ ? -1.0 : 1.0;
  phi_at_end_ = reg.phi_n(sign * delta_);
  constexpr int kCells = 1024;
  table_.resize(kCells + 1);
  table_[0] = 0.0;
  const double dx = sign * delta_ / kCells;
  auto f = [&](double s) {
    const double z = reg.zeta_n(s);
    return z * z * eta.d1(s);
  };
  for (int j = 0; j < kCells; ++j) {
    const double a = j * dx;
    table_[static_cast<std::size_t>(j) + 1] =
        table_[static_cast<std::size_t>(j)] +
        dx / 6.0 * (f(a) + 4.0 * f(a + 0.5 * dx) + f(a + dx));
  }
}

double ZetaSqEtaBracket::operator()(double r) const {
  const double sign = reflected_ ? -1.0 : 1.0;
  const double s = sign * r;  // progress along the hull, >= 0 when inside
  if (s <= 0.0) return 0.0;
  if (s >= delta_)
    return table_.back() + sign * (reg_->phi_n(r) - phi_at_end_);
  const double pos = s / delta_ * (static_cast<double>(table_.size()) - 1.0);
  const std::size_t j = static_cast<std::size_t>(pos);
  if (j + 1 >= table_.size()) return table_.back();
  const double w = pos - static_cast<double>(j);
  return table_[j] * (1.0 - w) + table_[j + 1] * w;
}

double entropy_residual(const Trajectory& traj, const EntropyTestFn& eta,
                        const TimeProfile& phi_time, const Field& rho_space) {
  if (!traj.full_cadence())
    throw std::invalid_argument("entropy_residual: trajectory must be stored at full cadence");
  if (rho_space.grid != traj.grid)
    throw std::invalid_argument("entropy_residual: grid mismatch");
  for (double v : rho_space.values)
    if (v < 0.0) throw std::invalid_argument("entropy_residual: rho_space must be >= 0");

  const GridSpec& g = traj.grid;
  const double hd = cell_volume(g);
  const double dt = traj.dt;
  const Field lap_rho = laplacian(rho_space);
  const ZetaSqEtaBracket zeta2_eta(*traj.reg, eta);

  double lhs = 0.0;
  double r_init = 0.0, r_lap = 0.0, r_fnu = 0.0, r_ito = 0.0, r_diss = 0.0, r_stoch = 0.0;

  for (std::size_t i = 0; i < rho_space.size(); ++i)
    r_init += eta.value(traj.u[0].values[i]) * rho_space.values[i];
  r_init *= phi_time.value(0.0) * hd;

  for (std::size_t s = 0; s + 1 < traj.snapshots(); ++s) {
    const double t = traj.times[s];
    const double pv = phi_time.value(t);
    const double pd = phi_time.deriv(t);
    const Field& uj = traj.u[s];

    Field zb = Field::zeros(g);
    for (std::size_t i = 0; i < zb.size(); ++i)
      zb.values[i] = traj.reg->zeta_n_bracket(uj.values[i]);
    std::vector<Field> gzb;
    for (int a = 0; a < g.dim; ++a) gzb.push_back(forward_diff(zb, a));

    double lhs_cell = 0.0, lap_cell = 0.0, fnu_cell = 0.0, ito_cell = 0.0,
           diss_cell = 0.0, stoch_cell = 0.0;
    for (std::size_t i = 0; i < uj.size(); ++i) {
      const double ui = uj.values[i];
      const double rs = rho_space.values[i];
      const double e1 = eta.d1(ui);
      const double e2 = eta.d2(ui);
      lhs_cell += eta.value(ui) * rs;
      lap_cell += zeta2_eta(ui) * lap_rho.values[i];
      fnu_cell += e1 * (traj.forcing(t, node_coords(g, i), ui) - traj.nu[s].values[i]) * rs;
      ito_cell += 0.5 * e2 * traj.noise_law.l2_sq(ui) * rs;
      double gsq = 0.0;
      for (int a = 0; a < g.dim; ++a) {
        const double d = gzb[static_cast<std::size_t>(a)].values[i];
        gsq += d * d;
      }
      diss_cell += e2 * gsq * rs;
      stoch_cell += e1 * rs * traj.noise_law.shape(ui);
    }
    lhs += -lhs_cell * pd * hd * dt;
    r_lap += lap_cell * pv * hd * dt;
    r_fnu += fnu_cell * pv * hd * dt;
    r_ito += ito_cell * pv * hd * dt;
    r_diss -= diss_cell * pv * hd * dt;
    const double omega =
        traj.noise_law.amp_weighted_sum(traj.noise->at(static_cast<int>(traj.snap_steps[s])));
    r_stoch += stoch_cell * hd * pv * omega;
  }
  return lhs - (r_init + r_lap + r_fnu + r_ito + r_diss + r_stoch);
}

double l1_distance(const Trajectory& a, const Trajectory& b, double t) {
  if (a.grid != b.grid) throw std::invalid_argument("l1_distance: grid mismatch");
  if (a.snapshots() != b.snapshots() || a.snap_steps != b.snap_steps ||
      std::abs(a.dt - b.dt) > 1e-15)
    throw std::invalid_argument("l1_distance: snapshot times differ");
  std::size_t best = 0;
  double bd = std::abs(a.times[0] - t);
  for (std::size_t s = 1; s < a.snapshots(); ++s) {
    const double d = std::abs(a.times[s] - t);
    if (d < bd) {
      bd = d;
      best = s;
    }
  }
  Field diff = a.u[best];
  for (std::size_t i = 0; i < diff.size(); ++i) diff.values[i] -= b.u[best].values[i];
  return lp_norm(diff, 1.0);
}

ComparisonResult comparison_check(const Trajectory& eps1, const Trajectory& eps2) {
  if (eps1.grid != eps2.grid) throw std::invalid_argument("comparison_check: grid mismatch");
  if (eps1.seed != eps2.seed)
    throw std::invalid_argument("comparison_check: runs must share the noise seed");
  if (eps1.epsilon < eps2.epsilon)
    throw std::invalid_argument("comparison_check: requires eps1 >= eps2");
  if (eps1.snap_steps != eps2.snap_steps)
    throw std::invalid_argument("comparison_check: snapshot grids differ");
  ComparisonResult r{std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity()};
  for (std::size_t s = 0; s < eps1.snapshots(); ++s)
    for (std::size_t i = 0; i < eps1.u[s].size(); ++i) {
      r.min_diff = std::min(r.min_diff, eps1.u[s].values[i] - eps2.u[s].values[i]);
      r.min_u2 = std::min(r.min_u2, eps2.u[s].values[i]);
    }
  return r;
}

}  // namespace spmo
