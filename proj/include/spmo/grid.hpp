#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace spmo {

/// Fixed smooth bump profile used by every mollifier in the project:
/// rho(r) = c * exp(-1/(4 r (1-r))) on (0,1), zero elsewhere.
/// Normalized so that the integral over (0,1) is 1; the peak is ~1.657,
/// inside the required range [0,2]. cdf and cdf2 are the first and second
/// primitives, served from a high-resolution table (absolute error < 1e-8).
namespace bump {

double rho(double r);
double rho_prime(double r);
double cdf(double r);   // \int_0^r rho
double cdf2(double r);  // \int_0^r cdf

}  // namespace bump

/// Uniform periodic discretization of the unit torus T^d, d in {1,2}.
/// The torus side length is fixed at 1, so h * n_axis == 1.
struct GridSpec {
  int dim = 1;
  int n_axis = 1;
  double h = 1.0;

  static GridSpec make(int dim, int n_axis);

  std::size_t size() const;
  bool operator==(const GridSpec&) const = default;
};

/// Real-valued grid function, row-major over axes (index = ix*n_axis + iy
/// for d=2). Plain value type; all grid operations are free functions.
struct Field {
  GridSpec grid;
  std::vector<double> values;

  static Field zeros(const GridSpec& g);
  static Field constant(const GridSpec& g, double c);
  /// Sample a continuum function at the grid nodes x_i = i*h.
  static Field sample(const GridSpec& g,
                      const std::function<double(std::array<double, 2>)>& f);

  double& at(std::size_t i) { return values[i]; }
  double at(std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }

  double min() const;
  double max() const;
  double max_abs() const;
  bool all_finite() const;
};

/// Coordinates of node i (unused axes are 0).
std::array<double, 2> node_coords(const GridSpec& g, std::size_t i);

struct MollifierSpec {
  double theta = 1.0;  // width; kernel support is (0, theta)
};

/// Second-order central Laplacian with periodic wrap.
Field laplacian(const Field& f);

/// Discrete H^1 seminorm squared: sum over forward differences,
/// sum_i |grad_h f|_i^2 h^d. Pairs exactly with the Laplacian under
/// summation by parts.
double gradient_sq_integral(const Field& f);

/// Forward-difference gradient component along `axis`.
Field forward_diff(const Field& f, int axis);

/// Centered-difference gradient component along `axis` (used by weak-form
/// estimators, deliberately not the solver's pairing).
Field centered_diff(const Field& f, int axis);

/// (sum_i |f_i|^p h^d)^(1/p). Throws for p < 1.
double lp_norm(const Field& f, double p);

/// sum_i f_i h^d (the integral over the unit torus).
double mass(const Field& f);

/// Discrete periodic convolution with the sampled tensor-product kernel
/// rho_theta^{(x)d}, kernel samples renormalized so their sum times h^d is 1.
/// If theta <= h the sampled kernel is empty; the input is returned
/// unchanged and *degenerate (when given) is set.
Field mollify(const Field& f, const MollifierSpec& m, bool* degenerate = nullptr);

}  // namespace spmo
