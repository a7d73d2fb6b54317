#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "icpattack/errors.hpp"

namespace icpattack {

/// Order-statistics quantile with linear interpolation between ranks
/// (the common "type 7" estimator). q in [0, 1].
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile: empty sample");
  if (q < 0.0 || q > 1.0) throw ValidationError("quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline double sample_mean(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("sample_mean: empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

/// Unbiased (n-1) standard deviation; zero for a single sample.
inline double sample_stddev(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("sample_stddev: empty sample");
  if (values.size() < 2) return 0.0;
  const double m = sample_mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

}  // namespace icpattack
