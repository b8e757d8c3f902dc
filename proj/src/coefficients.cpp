#include "spmo/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spmo {

namespace {

bool is_near_int(double x, int& out) {
  const double r = std::round(x);
  if (std::abs(x - r) < 1e-12 && r >= 1.0 && r < 16.0) {
    out = static_cast<int>(r);
    return true;
  }
  return false;
}

}  // namespace

PorousLaw PorousLaw::make(double m, double K) {
  if (!(m > 1.0)) throw std::invalid_argument("PorousLaw: m must exceed 1");
  if (!(K >= 1.0)) throw std::invalid_argument("PorousLaw: K must be >= 1");
  return PorousLaw{m, K};
}

double PorousLaw::phi(double r) const {
  int mi;
  if (is_near_int(m, mi)) {
    double p = r;
    const double a = std::abs(r);
    for (int i = 1; i < mi; ++i) p *= a;
    return p;
  }
  return std::copysign(std::pow(std::abs(r), m), r);
}

double PorousLaw::phi_prime(double r) const { return m * std::pow(std::abs(r), m - 1.0); }

double PorousLaw::zeta(double r) const {
  return std::sqrt(m) * std::pow(std::abs(r), 0.5 * (m - 1.0));
}

double PorousLaw::zeta_prime(double r) const {
  return std::sqrt(m) * 0.5 * (m - 1.0) * std::pow(std::abs(r), 0.5 * (m - 3.0));
}

double PorousLaw::zeta_bracket(double r) const {
  const double mag = 2.0 * std::sqrt(m) / (m + 1.0) * std::pow(std::abs(r), 0.5 * (m + 1.0));
  return std::copysign(mag, r);
}

namespace {

struct Cubic {
  double c[4];  // p(s) = c0 + c1 s + c2 s^2 + c3 s^3

  static Cubic hermite(double w, double v0, double d0, double v1, double d1) {
    // Monomial form of the cubic interpolant on [0, w].
    Cubic p;
    p.c[0] = v0;
    p.c[1] = d0;
    p.c[2] = (3.0 * (v1 - v0) / w - 2.0 * d0 - d1) / w;
    p.c[3] = (2.0 * (v0 - v1) / w + d0 + d1) / (w * w);
    return p;
  }

  double eval(double s) const { return ((c[3] * s + c[2]) * s + c[1]) * s + c[0]; }
  double slope(double s) const { return (3.0 * c[3] * s + 2.0 * c[2]) * s + c[1]; }

  double integral(double s) const {
    return (((c[3] / 4.0 * s + c[2] / 3.0) * s + c[1] / 2.0) * s + c[0]) * s;
  }

  double sq_integral(double s) const {
    double q[7] = {0, 0, 0, 0, 0, 0, 0};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) q[i + j] += c[i] * c[j];
    double acc = 0.0;
    for (int k = 6; k >= 0; --k) acc = acc * s + q[k] / (k + 1);
    return acc * s;
  }
};

}  // namespace

RegularizedLaw::RegularizedLaw(const PorousLaw& base, int n) : base_(base), n_(n) {
  if (n < 1) throw std::invalid_argument("RegularizedLaw: n must be >= 1");
  floor_ = 2.0 / n;
  ceil_ = base.zeta(static_cast<double>(n));
  const double nn = static_cast<double>(n);

  auto push = [this](int kind, double lo, double hi, const Cubic* cub, double cval) {
    Segment s;
    s.kind = kind;
    s.lo = lo;
    s.hi = hi;
    if (cub)
      std::copy(cub->c, cub->c + 4, s.c);
    else
      s.c[0] = cval;
    s.bracket_at_lo = 0.0;
    s.phi_at_lo = 0.0;
    segs_.push_back(s);
  };

  if (ceil_ <= floor_) {
    // Degenerate level: the floor dominates everywhere and zeta_n is constant.
    push(0, 0.0, nn, nullptr, floor_);
    top_ = nn;
  } else {
    // zeta(r0) = 2/n.
    const double r0 = std::pow(floor_ / std::sqrt(base.m), 2.0 / (base.m - 1.0));
    double w = std::min({1.0 / (4.0 * n), r0, (nn - r0) / 3.0});

    // Floor fillet: flat at r0 to the power law at r0 + w; shrink w until the
    // Fritsch-Carlson condition guarantees a monotone cubic.
    Cubic lo_fill{}, hi_fill{};
    for (int tries = 0;; ++tries) {
      const double v1 = base.zeta(r0 + w), d1 = base.zeta_prime(r0 + w);
      const double sec = (v1 - floor_) / w;
      if (sec > 0.0 && d1 <= 3.0 * sec) {
        lo_fill = Cubic::hermite(w, floor_, 0.0, v1, d1);
        break;
      }
      w *= 0.5;
      if (tries > 80) throw std::runtime_error("RegularizedLaw: floor fillet failed");
    }
    double wc = w;
    for (int tries = 0;; ++tries) {
      const double v0 = base.zeta(nn - wc), d0 = base.zeta_prime(nn - wc);
      const double sec = (ceil_ - v0) / wc;
      if (sec > 0.0 && d0 <= 3.0 * sec) {
        hi_fill = Cubic::hermite(wc, v0, d0, ceil_, 0.0);
        break;
      }
      wc *= 0.5;
      if (tries > 80) throw std::runtime_error("RegularizedLaw: ceiling fillet failed");
    }

    push(0, 0.0, r0, nullptr, floor_);
    push(2, r0, r0 + w, &lo_fill, 0.0);
    push(1, r0 + w, nn - wc, nullptr, 0.0);
    push(2, nn - wc, nn, &hi_fill, 0.0);
    top_ = nn;
  }

  // Accumulate the exact primitives at segment boundaries.
  double B = 0.0, P = 0.0;
  for (auto& s : segs_) {
    s.bracket_at_lo = B;
    s.phi_at_lo = P;
    const double len = s.hi - s.lo;
    switch (s.kind) {
      case 0:
        B += s.c[0] * len;
        P += s.c[0] * s.c[0] * len;
        break;
      case 1: {
        const double m = base_.m;
        B += 2.0 * std::sqrt(m) / (m + 1.0) *
             (std::pow(s.hi, 0.5 * (m + 1.0)) - std::pow(s.lo, 0.5 * (m + 1.0)));
        P += std::pow(s.hi, m) - std::pow(s.lo, m);
        break;
      }
      case 2: {
        Cubic cub;
        std::copy(s.c, s.c + 4, cub.c);
        B += cub.integral(len);
        P += cub.sq_integral(len);
        break;
      }
    }
  }
  bracket_total_ = B;
  phi_total_ = P;
  sup_dphi_ = std::max(floor_, ceil_) * std::max(floor_, ceil_);
}

double RegularizedLaw::eval(double a, int what) const {
  // a >= 0 assumed; beyond the construction range the law is constant.
  if (a >= top_) {
    const double zt = std::max(floor_, ceil_);
    switch (what) {
      case 0: return zt;
      case 1: return bracket_total_ + zt * (a - top_);
      case 2: return phi_total_ + zt * zt * (a - top_);
      default: return 0.0;
    }
  }
  std::size_t k = 0;
  while (k + 1 < segs_.size() && a >= segs_[k].hi) ++k;
  const Segment& s = segs_[k];
  const double ds = a - s.lo;
  switch (s.kind) {
    case 0:
      switch (what) {
        case 0: return s.c[0];
        case 1: return s.bracket_at_lo + s.c[0] * ds;
        case 2: return s.phi_at_lo + s.c[0] * s.c[0] * ds;
        default: return 0.0;
      }
    case 1: {
      const double m = base_.m;
      switch (what) {
        case 0: return base_.zeta(a);
        case 1:
          return s.bracket_at_lo + 2.0 * std::sqrt(m) / (m + 1.0) *
                                       (std::pow(a, 0.5 * (m + 1.0)) -
                                        std::pow(s.lo, 0.5 * (m + 1.0)));
        case 2: return s.phi_at_lo + std::pow(a, m) - std::pow(s.lo, m);
        default: return base_.zeta_prime(a);
      }
    }
    default: {
      Cubic cub;
      std::copy(s.c, s.c + 4, cub.c);
      switch (what) {
        case 0: return cub.eval(ds);
        case 1: return s.bracket_at_lo + cub.integral(ds);
        case 2: return s.phi_at_lo + cub.sq_integral(ds);
        default: return cub.slope(ds);
      }
    }
  }
}

double RegularizedLaw::zeta_n(double r) const { return eval(std::abs(r), 0); }

double RegularizedLaw::zeta_n_prime(double r) const {
  const double d = eval(std::abs(r), 3);
  return r < 0.0 ? -d : d;
}

double RegularizedLaw::phi_n(double r) const {
  return std::copysign(eval(std::abs(r), 2), r);
}

double RegularizedLaw::phi_n_prime(double r) const {
  const double z = zeta_n(r);
  return z * z;
}

double RegularizedLaw::zeta_n_bracket(double r) const {
  return std::copysign(eval(std::abs(r), 1), r);
}

double ForcingLaw::operator()(double t, const std::array<double, 2>& x, double r) const {
  (void)t;
  double v = N0 * r;
  if (kind == Kind::linear_plus_spatial) {
    const double b = std::pow(std::abs(std::sin(2.0 * M_PI * x[0])), kappa);
    v += K * b * std::copysign(std::min(std::abs(r), 1.0), r);
  }
  return v;
}

std::vector<double> NoiseLaw::default_amplitudes(double A, int k_modes) {
  std::vector<double> a(static_cast<std::size_t>(k_modes));
  for (int k = 1; k <= k_modes; ++k)
    a[static_cast<std::size_t>(k - 1)] = A * std::pow(2.0, -0.5 * k);
  return a;
}

double NoiseLaw::shape(double r) const {
  if (kind == Kind::linear) return r;
  // genuinely (1/2+kappa)-Holder near the origin, linear growth beyond 1
  const double a = std::abs(r);
  const double v = a <= 1.0 ? std::pow(a, 0.5 + kappa) : a;
  return std::copysign(v, r);
}

void NoiseLaw::apply(double r, std::span<double> out) const {
  const double s = shape(r);
  for (std::size_t k = 0; k < out.size() && k < amplitudes.size(); ++k)
    out[k] = amplitudes[k] * s;
}

double NoiseLaw::amp_sq_sum() const {
  double acc = 0.0;
  for (double a : amplitudes) acc += a * a;
  return acc;
}

double NoiseLaw::amp_weighted_sum(std::span<const double> dw) const {
  double acc = 0.0;
  const std::size_t k = std::min(dw.size(), amplitudes.size());
  for (std::size_t i = 0; i < k; ++i) acc += amplitudes[i] * dw[i];
  return acc;
}

PenaltyLaw PenaltyLaw::make(double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("PenaltyLaw: epsilon must be positive");
  return PenaltyLaw{epsilon};
}

double PenaltyLaw::operator()(double r, double s) const {
  const double d = r - s;
  return d > 0.0 ? d / epsilon : 0.0;
}

EntropyTestFn::EntropyTestFn(double delta) : delta_(delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("EntropyTestFn: delta must be positive");
}

EntropyTestFn EntropyTestFn::reflected(double delta) {
  EntropyTestFn f(delta);
  f.reflected_ = true;
  return f;
}

double EntropyTestFn::value(double r) const {
  if (reflected_) r = -r;
  if (r <= 0.0) return 0.0;
  if (r >= delta_) return delta_ * bump::cdf2(1.0) + (r - delta_);
  return delta_ * bump::cdf2(r / delta_);
}

double EntropyTestFn::d1(double r) const {
  const double s = reflected_ ? -r : r;
  if (s <= 0.0) return 0.0;
  const double v = bump::cdf(s / delta_);
  return reflected_ ? -v : v;
}

double EntropyTestFn::d2(double r) const {
  if (reflected_) r = -r;
  return bump::rho(r / delta_) / delta_;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& g, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth, int force_depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = g(lm), frm = g(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm))
    throw std::runtime_error("bracket: integrand is not finite");
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  // force a few subdivision levels so narrow features cannot alias away
  if (depth <= 0 ||
      (force_depth <= 0 && std::abs(left + right - whole) <= 15.0 * tol))
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1,
                          force_depth - 1) +
         adaptive_simpson(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1,
                          force_depth - 1);
}

}  // namespace

double bracket(const std::function<double(double)>& g, double r, double tol) {
  if (r == 0.0) return 0.0;
  const double a = std::min(0.0, r), b = std::max(0.0, r);
  const double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
    throw std::runtime_error("bracket: integrand is not finite");
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double v = adaptive_simpson(g, a, b, fa, fm, fb, whole, tol, 40, 6);
  return r > 0.0 ? v : -v;
}

Field mollified_initial(const Field& xi, int n) {
  if (n < 1) throw std::invalid_argument("mollified_initial: n must be >= 1");
  Field clamped = xi;
  const double bound = static_cast<double>(n);
  for (double& v : clamped.values) v = std::clamp(v, -bound, bound);
  return mollify(clamped, MollifierSpec{1.0 / n});
}

}  // namespace spmo
