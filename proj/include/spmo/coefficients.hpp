#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spmo/grid.hpp"

namespace spmo {

/// Power-law diffusion nonlinearity Phi(r) = |r|^(m-1) r with m > 1,
/// together with zeta = sqrt(Phi') and its primitive.
struct PorousLaw {
  double m = 2.0;
  double K = 1.0;

  static PorousLaw make(double m, double K);

  double phi(double r) const;
  double phi_prime(double r) const;       // m |r|^(m-1)
  double zeta(double r) const;            // sqrt(m) |r|^((m-1)/2)
  double zeta_prime(double r) const;      // for r != 0
  double zeta_bracket(double r) const;    // sign(r) (2 sqrt(m)/(m+1)) |r|^((m+1)/2)
};

/// Nondegenerate surrogate of a PorousLaw at level n:
///   zeta_n = clamp(zeta(min(|r|,n)), 2/n, zeta(n))
/// with both clamp corners replaced by C^1 monotone cubic fillets of width
/// <= 1/(4n). Guarantees zeta_n >= 2/n, sup_{|r|<=n} |zeta - zeta_n| <= 4/n,
/// and exact piecewise primitives for Phi_n = sign(r) \int_0^|r| zeta_n^2
/// and the bracket \int_0^r zeta_n.
class RegularizedLaw {
 public:
  RegularizedLaw(const PorousLaw& base, int n);

  double zeta_n(double r) const;
  double zeta_n_prime(double r) const;
  double phi_n(double r) const;            // odd, strictly increasing
  double phi_n_prime(double r) const;      // = zeta_n(r)^2
  double zeta_n_bracket(double r) const;   // odd primitive of zeta_n

  double floor_value() const { return floor_; }      // 2/n
  double sup_phi_prime() const { return sup_dphi_; } // sup zeta_n^2
  int level() const { return n_; }
  const PorousLaw& base() const { return base_; }

 private:
  struct Segment {
    // zeta_n on [lo, hi): kind 0 = constant, 1 = power law, 2 = cubic in (r - lo).
    int kind;
    double lo, hi;
    double c[4];          // cubic coefficients (kind 2) or c[0] = constant
    double bracket_at_lo; // \int_0^lo zeta_n
    double phi_at_lo;     // \int_0^lo zeta_n^2
  };

  double eval(double a, int what) const;  // what: 0 value, 1 bracket, 2 phi, 3 slope

  PorousLaw base_;
  int n_;
  double floor_, ceil_, sup_dphi_;
  std::vector<Segment> segs_;
  double bracket_total_, phi_total_, top_;
};

/// Inhomogeneity F(t,x,r); vanishes at r = 0 and is N0-Lipschitz in r.
struct ForcingLaw {
  enum class Kind { linear, linear_plus_spatial };
  Kind kind = Kind::linear;
  double N0 = 0.5;
  double K = 1.0;
  double kappa = 0.25;

  double operator()(double t, const std::array<double, 2>& x, double r) const;
};

/// Diffusion family sigma^k(r) = a_k * shape(r) mapping into l2;
/// shape is r (linear) or sign(r) |r|^(1/2+kappa) capped to linear growth
/// past |r| = 1 (holder).
struct NoiseLaw {
  enum class Kind { linear, holder };
  Kind kind = Kind::linear;
  std::vector<double> amplitudes;
  double K = 1.0;
  double kappa = 0.25;

  /// a_k = A 2^(-k/2), k = 1..k_modes.
  static std::vector<double> default_amplitudes(double A, int k_modes);

  double shape(double r) const;
  void apply(double r, std::span<double> out) const;
  double l2_sq(double r) const { return amp_sq_sum() * shape(r) * shape(r); }
  double amp_sq_sum() const;
  double amp_weighted_sum(std::span<const double> dw) const;  // sum_k a_k dw_k
};

/// Penalty G_eps(r, s) = (r - s)^+ / eps.
struct PenaltyLaw {
  double epsilon;

  static PenaltyLaw make(double epsilon);
  double operator()(double r, double s) const;
};

/// Convex entropy test function eta_delta with eta(0) = eta'(0) = 0 and
/// eta'' = rho_delta, built from the tabulated primitives of the bump.
/// The reflected variant is r -> eta_delta(-r) (approximates r^-), used for
/// the non-negativity check.
class EntropyTestFn {
 public:
  explicit EntropyTestFn(double delta);
  static EntropyTestFn reflected(double delta);

  double value(double r) const;   // |value(r) - r^+| <= delta (standard form)
  double d1(double r) const;      // in [0,1], reaches 1 at r >= delta
  double d2(double r) const;      // rho_delta(r) >= 0, supported in (0, delta)
  double delta() const { return delta_; }
  bool is_reflected() const { return reflected_; }

 private:
  double delta_;
  bool reflected_ = false;
};

/// Primitive \int_0^r g(s) ds by adaptive Simpson quadrature (tolerance
/// ~1e-10); throws if the integrand is not finite on the interval.
double bracket(const std::function<double(double)>& g, double r, double tol = 1e-10);

/// xi_n: clamp xi to [-n, n] pointwise, then mollify at width 1/n.
Field mollified_initial(const Field& xi, int n);

}  // namespace spmo
