#pragma once

#include <vector>

#include "spmo/solver.hpp"

namespace spmo {

/// Left-hand sides of the a-priori estimates and structural functionals,
/// evaluated per trajectory. Time integrals use the left-endpoint rule over
/// the snapshot grid; sup-in-time is taken over snapshots (cadence bias is
/// controlled by the snapshot configuration).
struct EstimateReport {
  double p = 2.0;
  // L2 estimate components:
  double sup_l2_pow_p = 0.0;            // sup_t ||u||_2^p
  double grad_zeta_bracket_pow_p = 0.0; // ( int ||grad [zeta_n](u)||_2^2 dt )^(p/2)
  double penalty_l2_pow_p = 0.0;        // ( (1/eps) int ||(u-S)^+||_2^2 dt )^(p/2)
  // L_{m+1} estimate components:
  double sup_lm1_pow = 0.0;             // sup_t ||u||_{m+1}^{m+1}
  double penalty_weighted = 0.0;        // (1/eps) int int |(u-S)^+|^2 |u|^{m-1}
  // Gradient of Phi_n:
  double grad_phi_sq = 0.0;             // int ||grad Phi_n(u)||_2^2 dt
  // Penalty functionals:
  double penalty_l1 = 0.0;              // int int G_eps(u, S)
  double penalty_l2_sq_scaled = 0.0;    // (1/eps^2) int ||(u-S)^+||_2^2 dt
  double penalty_sup_scaled = 0.0;      // (1/eps) sup_t int |(u-S)^+|^2 dx
  // Structure:
  double skorokhod = 0.0;               // int int (u - S) nu
  double min_u = 0.0;                   // min over Q_T
  double max_overshoot = 0.0;           // max over Q_T of u - S
};

struct AprioriL2 {
  double sup_l2_pow_p;
  double grad_zeta_bracket_pow_p;
  double penalty_l2_pow_p;
};

struct AprioriLm1 {
  double sup_lm1_pow;
  double penalty_weighted;
};

struct PenaltyNorms {
  double l1;        // int int G_eps
  double l2_sq;     // int ||(u-S)^+||_2^2 dt  (unscaled)
  double sup_l2;    // sup_t int |(u-S)^+|^2 dx
};

AprioriL2 apriori_l2_report(const Trajectory& traj, double p);
AprioriLm1 apriori_lm1_report(const Trajectory& traj);
PenaltyNorms penalty_norms(const Trajectory& traj);
double skorokhod_functional(const Trajectory& traj);
EstimateReport estimate_all(const Trajectory& traj, double p = 2.0);

/// Smooth non-negative time profiles on [0, T), built from the bump:
/// `decay` starts at 1 and vanishes smoothly before tau; `interior` is a
/// bump supported in (t0, t0 + width).
class TimeProfile {
 public:
  static TimeProfile decay(double tau);
  static TimeProfile interior(double t0, double width);
  double value(double t) const;
  double deriv(double t) const;

 private:
  enum class Kind { decay, interior } kind_;
  double a_, b_;
  TimeProfile(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
};

/// Primitive r -> int_0^r zeta_n(s)^2 eta'(s) ds. Tabulated on [0, delta];
/// continued exactly through Phi_n beyond (eta' = 1 there).
class ZetaSqEtaBracket {
 public:
  ZetaSqEtaBracket(const RegularizedLaw& reg, const EntropyTestFn& eta);
  double operator()(double r) const;

 private:
  const RegularizedLaw* reg_;
  double delta_;
  bool reflected_;
  double phi_at_end_;
  std::vector<double> table_;  // cumulative over the eta'' support hull
};

/// Signed deficit (left minus right) of the discretized entropy inequality
/// for the triple (eta, phi_time, rho_space); positive values are violations.
/// Requires full cadence.
double entropy_residual(const Trajectory& traj, const EntropyTestFn& eta,
                        const TimeProfile& phi_time, const Field& rho_space);

/// L1 grid norm of u_a - u_b at the snapshot nearest t.
double l1_distance(const Trajectory& a, const Trajectory& b, double t);

struct ComparisonResult {
  double min_diff;  // min over Q_T of u_eps1 - u_eps2
  double min_u2;    // min over Q_T of u_eps2
};

/// Pathwise comparison of two runs coupled by the same noise; eps1 > eps2.
ComparisonResult comparison_check(const Trajectory& eps1, const Trajectory& eps2);

}  // namespace spmo
