#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spmo/coefficients.hpp"

namespace spmo {

/// Wiener increments for k_modes independent modes over `steps` Euler steps.
/// Mode k's stream depends only on (seed, k), so regeneration is bit-identical
/// and extending k_modes leaves existing mode streams untouched.
struct NoisePath {
  std::uint64_t seed = 0;
  double dt = 0.0;
  int steps = 0;
  int k_modes = 0;
  std::vector<double> increments;  // row-major: [step * k_modes + mode]

  std::span<const double> at(int step) const {
    return {increments.data() + static_cast<std::size_t>(step) * k_modes,
            static_cast<std::size_t>(k_modes)};
  }
};

NoisePath sample_noise(std::uint64_t seed, double dt, int steps, int k_modes);

/// Scalar barrier path from dS = h_S dt + sum_k sigma^k(S) dW^k, clamped at 0.
struct ObstaclePath {
  std::vector<double> values;  // S_j, j = 0..steps
  double s0 = 0.0;
  double h_s = 0.0;
  long clamp_count = 0;
};

ObstaclePath integrate_obstacle(double s0, double h_s, const NoisePath& noise,
                                const NoiseLaw& law);

/// Deterministic per-path seed derivation for Monte Carlo replicas.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace spmo
