#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace covertime {

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
  double sd() const { return se * std::sqrt(static_cast<double>(count)); }
};

// Sample mean and standard error, accumulated in the order given.
inline MeanSE mean_se(std::span<const double> values) {
  MeanSE out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return out;
}

// Difference of two independent means in units of its standard error.
inline double z_score(const MeanSE& a, const MeanSE& b) {
  const double se = std::hypot(a.se, b.se);
  if (se == 0.0) return a.mean == b.mean ? 0.0 : INFINITY;
  return (a.mean - b.mean) / se;
}

// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Asymptotic 1 - alpha critical value of the two-sample KS distance.
inline double ks_critical(std::size_t na, std::size_t nb, double alpha = 0.001) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt(static_cast<double>(na + nb) / (static_cast<double>(na) * static_cast<double>(nb)));
}

}  // namespace covertime
