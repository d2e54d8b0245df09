#ifndef QEXP_QUANTILE_HPP
#define QEXP_QUANTILE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "qexp/errors.hpp"

namespace qexp {

// Midpoint-interpolated empirical quantile of sorted data: the i-th order
// statistic (1-based) sits at probability (i - 0.5)/n, linear in between,
// clamped to the extremes outside [0.5/n, 1 - 0.5/n].
inline double midpoint_quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw InvalidParameter("quantile of an empty set");
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile probability must lie in [0, 1]");
  const double n = static_cast<double>(sorted.size());
  const double h = n * prob + 0.5;  // 1-based fractional position
  if (h <= 1.0) return sorted.front();
  if (h >= n) return sorted.back();
  const double lo = std::floor(h);
  const auto i = static_cast<std::size_t>(lo) - 1;
  const double frac = h - lo;
  if (frac == 0.0) return sorted[i];
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

inline double midpoint_quantile(std::vector<double> values, double prob) {
  std::sort(values.begin(), values.end());
  return midpoint_quantile_sorted(values, prob);
}

inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double sample_mean(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  return v.empty() ? 0.0 : mean / static_cast<double>(v.size());
}

}  // namespace qexp

#endif  // QEXP_QUANTILE_HPP
