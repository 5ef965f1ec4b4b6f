#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bcm/metrics.hpp"
#include "bcm/rng.hpp"

using namespace bcm;

TEST(RSquared, IdentityAndMean) {
  const std::vector<double> t{0.1, 0.4, 0.35, 0.9};
  EXPECT_DOUBLE_EQ(r_squared(t, t), 1.0);
  const double mean = (0.1 + 0.4 + 0.35 + 0.9) / 4;
  EXPECT_NEAR(r_squared(std::vector<double>(4, mean), t), 0.0, 1e-15);
}

TEST(RSquared, HandComputedLengthFive) {
  // truth mean 0.5; SS_tot = 0.16+0.04+0+0.04+0.16 = 0.4
  // residuals 0.1,-0.1,0.2,0,-0.1 -> SS_res = 0.07
  const std::vector<double> truth{0.1, 0.3, 0.5, 0.7, 0.9};
  const std::vector<double> est{0.0, 0.4, 0.3, 0.7, 1.0};
  EXPECT_NEAR(r_squared(est, truth), 1.0 - 0.07 / 0.4, 1e-12);
}

TEST(RSquared, CanBeNegativeAndRejectsBadInput) {
  EXPECT_LT(r_squared(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_THROW(r_squared(std::vector<double>{1, 2}, std::vector<double>{3, 3}), std::invalid_argument);
  EXPECT_THROW(r_squared(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
  EXPECT_THROW(r_squared(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Mae, Examples) {
  const std::vector<double> t{0.2, 0.5, 0.8};
  EXPECT_EQ(mae(t, t), 0.0);
  EXPECT_NEAR(mae(std::vector<double>{0.3, 0.6, 0.9}, t), 0.1, 1e-15);
  EXPECT_EQ(mae(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0);
  EXPECT_THROW(mae(t, std::vector<double>{1}), std::invalid_argument);
}

TEST(Mae, MetricProperties) {
  Rng rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> a(7), b(7), c(7);
    for (std::size_t i = 0; i < 7; ++i) {
      a[i] = rng.uniform();
      b[i] = rng.uniform();
      c[i] = rng.uniform();
    }
    EXPECT_EQ(mae(a, b), mae(b, a));
    EXPECT_LE(mae(a, c), mae(a, b) + mae(b, c) + 1e-15);
  }
}

TEST(ErrorSummary, Fields) {
  const auto e = error_summary(0.27, 0.3, 1.5);
  EXPECT_NEAR(e.abs_error, 0.03, 1e-15);
  EXPECT_NEAR(*e.rel_error, 0.1, 1e-14);
  EXPECT_EQ(e.wall_time_s, 1.5);
  EXPECT_FALSE(error_summary(0.1, 0.0, 0).rel_error.has_value());
}

TEST(Summarize, SingleAndPair) {
  const auto one = summarize(std::vector<double>{0.7});
  EXPECT_EQ(one.n, 1u);
  EXPECT_EQ(one.mean, 0.7);
  EXPECT_EQ(one.median, 0.7);
  EXPECT_EQ(one.ci95_low, 0.7);
  EXPECT_EQ(one.ci95_high, 0.7);
  const auto two = summarize(std::vector<double>{0.2, 0.6});
  EXPECT_NEAR(two.mean, 0.4, 1e-15);
  EXPECT_NEAR(two.median, 0.4, 1e-15);
  // sd = sqrt(0.08), half width = 1.96 * sd / sqrt(2) = 0.392
  EXPECT_NEAR(two.ci95_high - two.mean, 0.392, 1e-12);
  EXPECT_THROW(summarize(std::vector<double>{}), std::invalid_argument);
}

TEST(Summarize, NinetiethPercentileMatchesSortOracle) {
  Rng rng(8);
  std::vector<double> v(100);
  for (auto& x : v) x = rng.uniform();
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  // Linear interpolation at position 0.9 * 99 = 89.1.
  const double oracle = sorted[89] + 0.1 * (sorted[90] - sorted[89]);
  const std::vector<double> levels{0.9};
  EXPECT_NEAR(summarize(v, levels).quantiles[0], oracle, 1e-15);
}

TEST(Summarize, PermutationInvariant) {
  Rng rng(9);
  std::vector<double> v(37);
  for (auto& x : v) x = rng.uniform() * 1e3;
  const std::vector<double> levels{0.1, 0.5, 0.9};
  const auto a = summarize(v, levels);
  std::reverse(v.begin(), v.end());
  std::swap(v[3], v[20]);
  const auto b = summarize(v, levels);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.median, b.median);
  EXPECT_EQ(a.ci95_low, b.ci95_low);
  EXPECT_EQ(a.quantiles, b.quantiles);
}

TEST(Summarize, ErrorSummariesUseAbsoluteError) {
  const std::vector<ErrorSummary> rs{error_summary(0.1, 0.2, 0), error_summary(0.35, 0.3, 0)};
  const auto a = summarize(std::span<const ErrorSummary>(rs), std::vector<double>{});
  EXPECT_NEAR(a.mean, 0.075, 1e-15);
}

TEST(Quantile, Edges) {
  const std::vector<double> s{1, 2, 3};
  EXPECT_EQ(quantile_sorted(s, 0.0), 1.0);
  EXPECT_EQ(quantile_sorted(s, 1.0), 3.0);
  EXPECT_EQ(quantile_sorted(s, 0.25), 1.5);
  EXPECT_THROW(quantile_sorted(s, 1.5), std::invalid_argument);
}
