#include "spmo/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace spmo {

namespace bump {
namespace {

constexpr double kNorm = 4.50456724208717;  // 1 / \int_0^1 exp(-1/(4r(1-r))) dr

double rho_raw(double r) {
  if (r <= 0.0 || r >= 1.0) return 0.0;
  return std::exp(-1.0 / (4.0 * r * (1.0 - r)));
}

struct Tables {
  static constexpr int kCells = 16384;
  std::vector<double> cdf;   // at nodes j/kCells
  std::vector<double> cdf2;

  Tables() : cdf(kCells + 1), cdf2(kCells + 1) {
    const double dx = 1.0 / kCells;
    cdf[0] = 0.0;
    cdf2[0] = 0.0;
    for (int j = 0; j < kCells; ++j) {
      const double a = j * dx;
      const double fa = kNorm * rho_raw(a);
      const double fm = kNorm * rho_raw(a + 0.5 * dx);
      const double fb = kNorm * rho_raw(a + dx);
      cdf[j + 1] = cdf[j] + dx / 6.0 * (fa + 4.0 * fm + fb);
      // Simpson for the second primitive over the same cell: integrand is
      // cdf itself, whose midpoint value we rebuild from the half-cell rule.
      const double cdf_mid =
          cdf[j] + 0.5 * dx / 6.0 * (fa + 4.0 * kNorm * rho_raw(a + 0.25 * dx) + fm);
      cdf2[j + 1] = cdf2[j] + dx / 6.0 * (cdf[j] + 4.0 * cdf_mid + cdf[j + 1]);
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

double interp(const std::vector<double>& tab, double x) {
  const double s = x * Tables::kCells;
  const int j = static_cast<int>(s);
  if (j >= Tables::kCells) return tab[Tables::kCells];
  const double w = s - j;
  return tab[j] * (1.0 - w) + tab[j + 1] * w;
}

}  // namespace

double rho(double r) { return kNorm * rho_raw(r); }

double rho_prime(double r) {
  if (r <= 0.0 || r >= 1.0) return 0.0;
  const double q = r * (1.0 - r);
  return kNorm * rho_raw(r) * (1.0 - 2.0 * r) / (4.0 * q * q);
}

double cdf(double r) {
  if (r <= 0.0) return 0.0;
  if (r >= 1.0) return tables().cdf[Tables::kCells];
  return interp(tables().cdf, r);
}

double cdf2(double r) {
  if (r <= 0.0) return 0.0;
  if (r >= 1.0)
    return tables().cdf2[Tables::kCells] + (r - 1.0) * tables().cdf[Tables::kCells];
  return interp(tables().cdf2, r);
}

}  // namespace bump

GridSpec GridSpec::make(int dim, int n_axis) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("GridSpec: dim must be 1 or 2");
  if (n_axis < 1) throw std::invalid_argument("GridSpec: n_axis must be positive");
  return GridSpec{dim, n_axis, 1.0 / n_axis};
}

std::size_t GridSpec::size() const {
  std::size_t s = static_cast<std::size_t>(n_axis);
  return dim == 2 ? s * s : s;
}

Field Field::zeros(const GridSpec& g) { return Field{g, std::vector<double>(g.size(), 0.0)}; }

Field Field::constant(const GridSpec& g, double c) {
  return Field{g, std::vector<double>(g.size(), c)};
}

Field Field::sample(const GridSpec& g,
                    const std::function<double(std::array<double, 2>)>& f) {
  Field out = zeros(g);
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = f(node_coords(g, i));
  return out;
}

double Field::min() const {
  double v = values[0];
  for (double x : values) v = std::min(v, x);
  return v;
}

double Field::max() const {
  double v = values[0];
  for (double x : values) v = std::max(v, x);
  return v;
}

double Field::max_abs() const {
  double v = 0.0;
  for (double x : values) v = std::max(v, std::abs(x));
  return v;
}

bool Field::all_finite() const {
  for (double x : values)
    if (!std::isfinite(x)) return false;
  return true;
}

std::array<double, 2> node_coords(const GridSpec& g, std::size_t i) {
  if (g.dim == 1) return {static_cast<double>(i) * g.h, 0.0};
  const std::size_t n = static_cast<std::size_t>(g.n_axis);
  return {static_cast<double>(i / n) * g.h, static_cast<double>(i % n) * g.h};
}

Field laplacian(const Field& f) {
  const GridSpec& g = f.grid;
  const int n = g.n_axis;
  const double inv_h2 = 1.0 / (g.h * g.h);
  Field out = Field::zeros(g);
  if (g.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1 == n) ? 0 : i + 1;
      const int im = (i == 0) ? n - 1 : i - 1;
      out.values[i] = (f.values[ip] - 2.0 * f.values[i] + f.values[im]) * inv_h2;
    }
    return out;
  }
  for (int ix = 0; ix < n; ++ix) {
    const int xp = (ix + 1 == n) ? 0 : ix + 1;
    const int xm = (ix == 0) ? n - 1 : ix - 1;
    for (int iy = 0; iy < n; ++iy) {
      const int yp = (iy + 1 == n) ? 0 : iy + 1;
      const int ym = (iy == 0) ? n - 1 : iy - 1;
      const std::size_t c = static_cast<std::size_t>(ix) * n + iy;
      out.values[c] =
          (f.values[static_cast<std::size_t>(xp) * n + iy] +
           f.values[static_cast<std::size_t>(xm) * n + iy] +
           f.values[static_cast<std::size_t>(ix) * n + yp] +
           f.values[static_cast<std::size_t>(ix) * n + ym] - 4.0 * f.values[c]) *
          inv_h2;
    }
  }
  return out;
}

namespace {

Field shifted_diff(const Field& f, int axis, bool centered) {
  const GridSpec& g = f.grid;
  const int n = g.n_axis;
  Field out = Field::zeros(g);
  const double scale = centered ? 1.0 / (2.0 * g.h) : 1.0 / g.h;
  auto wrap = [n](int i) { return i < 0 ? i + n : (i >= n ? i - n : i); };
  if (g.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const double lo = centered ? f.values[wrap(i - 1)] : f.values[i];
      out.values[i] = (f.values[wrap(i + 1)] - lo) * scale;
    }
    return out;
  }
  for (int ix = 0; ix < n; ++ix)
    for (int iy = 0; iy < n; ++iy) {
      const std::size_t c = static_cast<std::size_t>(ix) * n + iy;
      int jx = ix, jy = iy, kx = ix, ky = iy;
      if (axis == 0) {
        jx = wrap(ix + 1);
        kx = centered ? wrap(ix - 1) : ix;
      } else {
        jy = wrap(iy + 1);
        ky = centered ? wrap(iy - 1) : iy;
      }
      out.values[c] = (f.values[static_cast<std::size_t>(jx) * n + jy] -
                       f.values[static_cast<std::size_t>(kx) * n + ky]) *
                      scale;
    }
  return out;
}

}  // namespace

Field forward_diff(const Field& f, int axis) { return shifted_diff(f, axis, false); }
Field centered_diff(const Field& f, int axis) { return shifted_diff(f, axis, true); }

double gradient_sq_integral(const Field& f) {
  const GridSpec& g = f.grid;
  const int n = g.n_axis;
  const double inv_h = 1.0 / g.h;
  double acc = 0.0;
  if (g.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const double d = (f.values[(i + 1 == n) ? 0 : i + 1] - f.values[i]) * inv_h;
      acc += d * d;
    }
  } else {
    for (int ix = 0; ix < n; ++ix) {
      const int xp = (ix + 1 == n) ? 0 : ix + 1;
      for (int iy = 0; iy < n; ++iy) {
        const int yp = (iy + 1 == n) ? 0 : iy + 1;
        const std::size_t c = static_cast<std::size_t>(ix) * n + iy;
        const double dx = (f.values[static_cast<std::size_t>(xp) * n + iy] - f.values[c]) * inv_h;
        const double dy = (f.values[static_cast<std::size_t>(ix) * n + yp] - f.values[c]) * inv_h;
        acc += dx * dx + dy * dy;
      }
    }
  }
  double hd = g.h;
  if (g.dim == 2) hd *= g.h;
  return acc * hd;
}

double lp_norm(const Field& f, double p) {
  if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
  double hd = f.grid.h;
  if (f.grid.dim == 2) hd *= f.grid.h;
  double acc = 0.0;
  if (p == 1.0) {
    for (double v : f.values) acc += std::abs(v);
  } else if (p == 2.0) {
    for (double v : f.values) acc += v * v;
  } else {
    for (double v : f.values) acc += std::pow(std::abs(v), p);
  }
  acc *= hd;
  if (p == 1.0) return acc;
  if (p == 2.0) return std::sqrt(acc);
  return std::pow(acc, 1.0 / p);
}

double mass(const Field& f) {
  double acc = 0.0;
  for (double v : f.values) acc += v;
  double hd = f.grid.h;
  if (f.grid.dim == 2) hd *= f.grid.h;
  return acc * hd;
}

namespace {

// One-axis periodic convolution with weights w (offset j means f(i - j)).
void convolve_axis(std::vector<double>& vals, int n, int dim, int axis,
                   const std::vector<double>& w) {
  std::vector<double> line(static_cast<std::size_t>(n));
  std::vector<double> out_line(static_cast<std::size_t>(n));
  const int lines = (dim == 1) ? 1 : n;
  for (int l = 0; l < lines; ++l) {
    for (int i = 0; i < n; ++i) {
      std::size_t idx = (dim == 1) ? i
                        : (axis == 0 ? static_cast<std::size_t>(i) * n + l
                                     : static_cast<std::size_t>(l) * n + i);
      line[i] = vals[idx];
    }
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) {
        int src = i - static_cast<int>(j);
        while (src < 0) src += n;
        acc += w[j] * line[src];
      }
      out_line[i] = acc;
    }
    for (int i = 0; i < n; ++i) {
      std::size_t idx = (dim == 1) ? i
                        : (axis == 0 ? static_cast<std::size_t>(i) * n + l
                                     : static_cast<std::size_t>(l) * n + i);
      vals[idx] = out_line[i];
    }
  }
}

}  // namespace

Field mollify(const Field& f, const MollifierSpec& m, bool* degenerate) {
  if (degenerate) *degenerate = false;
  if (m.theta <= 0.0) throw std::invalid_argument("mollify: theta must be positive");
  if (m.theta > 1.0) throw std::invalid_argument("mollify: theta exceeds the torus period");
  const GridSpec& g = f.grid;
  const double h = g.h;

  // Kernel samples rho_theta(j h) = theta^{-1} rho(j h / theta), j >= 0.
  std::vector<double> w;
  double sum = 0.0;
  for (int j = 0; j < g.n_axis; ++j) {
    const double r = j * h;
    if (r >= m.theta && j > 0) break;
    const double v = bump::rho(r / m.theta) / m.theta;
    w.push_back(v);
    sum += v;
  }
  if (sum <= 0.0) {
    // theta <= h: no interior sample survives, kernel degenerates to identity.
    if (degenerate) *degenerate = true;
    return f;
  }
  for (double& v : w) v /= (sum * h);  // now sum(w) * h == 1 per axis
  for (double& v : w) v *= h;          // fold the quadrature weight into w

  Field out = f;
  for (int axis = 0; axis < g.dim; ++axis) convolve_axis(out.values, g.n_axis, g.dim, axis, w);
  return out;
}

}  // namespace spmo
