#include "spmo/stochastic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace spmo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Standard normals from an mt19937_64 stream via Box-Muller on explicit
// 53-bit uniforms; keeps the output independent of the standard library's
// normal_distribution implementation.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

  double next() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    const double u1 = ((eng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = (eng_() >> 11) * 0x1.0p-53;          // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_ = false;
};

}  // namespace

NoisePath sample_noise(std::uint64_t seed, double dt, int steps, int k_modes) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_noise: dt must be positive");
  if (steps < 1) throw std::invalid_argument("sample_noise: steps must be >= 1");
  if (k_modes < 1) throw std::invalid_argument("sample_noise: k_modes must be >= 1");
  NoisePath p;
  p.seed = seed;
  p.dt = dt;
  p.steps = steps;
  p.k_modes = k_modes;
  p.increments.resize(static_cast<std::size_t>(steps) * k_modes);
  const double sd = std::sqrt(dt);
  for (int k = 0; k < k_modes; ++k) {
    GaussianStream gs(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(k) + 1)));
    for (int j = 0; j < steps; ++j)
      p.increments[static_cast<std::size_t>(j) * k_modes + k] = sd * gs.next();
  }
  return p;
}

ObstaclePath integrate_obstacle(double s0, double h_s, const NoisePath& noise,
                                const NoiseLaw& law) {
  if (s0 < 0.0) throw std::invalid_argument("integrate_obstacle: S0 must be >= 0");
  if (h_s < 0.0) throw std::invalid_argument("integrate_obstacle: h_S must be >= 0");
  ObstaclePath path;
  path.s0 = s0;
  path.h_s = h_s;
  path.values.resize(static_cast<std::size_t>(noise.steps) + 1);
  path.values[0] = s0;
  double s = s0;
  for (int j = 0; j < noise.steps; ++j) {
    const double dw = law.amp_weighted_sum(noise.at(j));
    double next = s + h_s * noise.dt + law.shape(s) * dw;
    if (next < 0.0) {
      next = 0.0;
      ++path.clamp_count;
    }
    path.values[static_cast<std::size_t>(j) + 1] = next;
    s = next;
  }
  return path;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base + splitmix64(index + 0x51ed2701ULL));
}

}  // namespace spmo
