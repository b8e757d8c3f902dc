#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace spmo::harness {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_lo = 0.0;   // 95% bootstrap interval (paired resampling of paths)
  double ci_hi = 0.0;
  bool degenerate = false;  // non-positive values made a log-log fit impossible
};

/// Least-squares slope of log(y) against log(x).
SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Log-log fit of the ensemble mean of per-path samples against x, with a
/// paired bootstrap (path indices resampled once per replicate across all
/// sweep points, respecting common-random-number coupling).
SlopeFit loglog_fit_bootstrap(const std::vector<double>& x,
                              const std::vector<std::vector<double>>& samples,
                              int replicates = 200, std::uint64_t seed = 7);

double mean(const std::vector<double>& v);

}  // namespace spmo::harness
