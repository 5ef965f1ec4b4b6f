#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace bcm {

struct ErrorSummary {
  double abs_error = 0.0;
  std::optional<double> rel_error;  // undefined for epsilon == 0
  std::optional<double> r2;
  std::optional<double> mae;
  double wall_time_s = 0.0;
};

inline ErrorSummary error_summary(double epsilon_hat, double epsilon_true, double wall_time_s) {
  ErrorSummary e;
  e.abs_error = std::abs(epsilon_hat - epsilon_true);
  if (epsilon_true > 0.0) e.rel_error = e.abs_error / epsilon_true;
  e.wall_time_s = wall_time_s;
  return e;
}

/// Coefficient of determination 1 - SS_res / SS_tot. Throws for a constant truth.
inline double r_squared(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("r_squared: length mismatch");
  if (truth.size() < 2) throw std::invalid_argument("r_squared: need at least two entries");
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - estimate[i]) * (truth[i] - estimate[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) throw std::invalid_argument("r_squared: truth vector is constant");
  return 1.0 - ss_res / ss_tot;
}

inline double mae(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("mae: length mismatch");
  if (truth.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - estimate[i]);
  return s / static_cast<double>(truth.size());
}

/// Quantile by linear interpolation between order statistics of a sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct Aggregate {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double ci95_low = 0.0;   ///< normal approximation: mean -/+ 1.96 sd / sqrt(n)
  double ci95_high = 0.0;
  std::vector<double> quantiles;  ///< one per requested level
};

inline Aggregate summarize(std::span<const double> values, std::span<const double> quantile_levels = {}) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  Aggregate a;
  a.n = sorted.size();
  // Sum in sorted order so the result does not depend on input order.
  double sum = 0.0;
  for (double v : sorted) sum += v;
  a.mean = sum / static_cast<double>(a.n);
  a.median = quantile_sorted(sorted, 0.5);
  double half_width = 0.0;
  if (a.n > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - a.mean) * (v - a.mean);
    const double sd = std::sqrt(ss / static_cast<double>(a.n - 1));
    half_width = 1.96 * sd / std::sqrt(static_cast<double>(a.n));
  }
  a.ci95_low = a.mean - half_width;
  a.ci95_high = a.mean + half_width;
  for (double q : quantile_levels) a.quantiles.push_back(quantile_sorted(sorted, q));
  return a;
}

/// Aggregates of the absolute errors of a group of results.
inline Aggregate summarize(std::span<const ErrorSummary> results, std::span<const double> quantile_levels) {
  std::vector<double> errs;
  errs.reserve(results.size());
  for (const auto& r : results) errs.push_back(r.abs_error);
  return summarize(std::span<const double>(errs), quantile_levels);
}

}  // namespace bcm
