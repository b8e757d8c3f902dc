#include "spmo/harness/fit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace spmo::harness {

double mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

namespace {

std::optional<std::pair<double, double>> ls_fit(const std::vector<double>& x,
                                                const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::nullopt;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) return std::nullopt;
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  return std::make_pair(slope, intercept);
}

}  // namespace

SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("loglog_fit: need at least 3 matching points");
  SlopeFit f;
  const auto r = ls_fit(x, y);
  if (!r) {
    f.degenerate = true;
    return f;
  }
  f.slope = r->first;
  f.intercept = r->second;
  f.ci_lo = f.ci_hi = f.slope;
  return f;
}

SlopeFit loglog_fit_bootstrap(const std::vector<double>& x,
                              const std::vector<std::vector<double>>& samples,
                              int replicates, std::uint64_t seed) {
  if (x.size() != samples.size() || x.size() < 3)
    throw std::invalid_argument("loglog_fit_bootstrap: need at least 3 sweep points");
  const std::size_t paths = samples.front().size();
  for (const auto& s : samples)
    if (s.size() != paths)
      throw std::invalid_argument("loglog_fit_bootstrap: ragged samples");

  std::vector<double> means(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) means[i] = mean(samples[i]);
  SlopeFit f = loglog_fit(x, means);
  if (f.degenerate || paths < 2) return f;

  std::mt19937_64 eng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, paths - 1);
  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(replicates));
  std::vector<std::size_t> idx(paths);
  std::vector<double> ymean(x.size());
  for (int b = 0; b < replicates; ++b) {
    for (auto& i : idx) i = pick(eng);
    bool ok = true;
    for (std::size_t p = 0; p < x.size(); ++p) {
      double acc = 0.0;
      for (std::size_t i : idx) acc += samples[p][i];
      ymean[p] = acc / static_cast<double>(paths);
      if (!(ymean[p] > 0.0)) ok = false;
    }
    if (!ok) continue;
    if (const auto r = ls_fit(x, ymean)) slopes.push_back(r->first);
  }
  if (slopes.size() >= 10) {
    std::sort(slopes.begin(), slopes.end());
    const auto q = [&](double p) {
      const double pos = p * (static_cast<double>(slopes.size()) - 1.0);
      const std::size_t lo = static_cast<std::size_t>(pos);
      const double w = pos - static_cast<double>(lo);
      if (lo + 1 >= slopes.size()) return slopes.back();
      return slopes[lo] * (1.0 - w) + slopes[lo + 1] * w;
    };
    f.ci_lo = q(0.025);
    f.ci_hi = q(0.975);
  }
  return f;
}

}  // namespace spmo::harness
