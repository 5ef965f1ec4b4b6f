#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "bcm/msm.hpp"
#include "bcm/optimize.hpp"

using namespace bcm;

namespace {

// Reference moments written out from the textbook definitions.
std::array<double, 9> reference_moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    m2 += std::pow(v - mean, 2) / n;
    m3 += std::pow(v - mean, 3) / n;
    m4 += std::pow(v - mean, 4) / n;
  }
  std::array<double, 9> out{mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
  for (std::size_t lag = 1; lag <= 5; ++lag) {
    double c = 0;
    for (std::size_t t = 0; t + lag < x.size(); ++t) c += (x[t] - mean) * (x[t + lag] - mean);
    out[3 + lag] = c / n / m2;
  }
  return out;
}

ModelParams desk(std::size_t t = 128, std::size_t m = 8, std::size_t k = 0, double eps = 0.3) {
  ModelParams p;
  p.n_steps = t;
  p.edges_per_step = m;
  p.proxies_per_step = k;
  p.epsilon = eps;
  return p;
}

}  // namespace

TEST(Halton, KnownPrefix) {
  EXPECT_EQ(halton_points(4, {0.0, 1.0}), (std::vector<double>{0.5, 0.25, 0.75, 0.125}));
  EXPECT_EQ(halton_points(4, {0.0, 0.5}), (std::vector<double>{0.25, 0.125, 0.375, 0.0625}));
  ASSERT_EQ(halton_points(1, {0.2, 0.4}).size(), 1u);
  EXPECT_DOUBLE_EQ(halton_points(1, {0.2, 0.4})[0], 0.3);
  EXPECT_THROW(halton_points(0, {}), std::invalid_argument);
}

TEST(Halton, PrefixProperty) {
  const auto a = halton_points(200, {});
  const auto b = halton_points(201, {});
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  for (double v : b) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 0.5);
  }
}

TEST(Moments, ConstantSeries) {
  const std::vector<double> flat(20, 3.0);
  const auto m = moments(flat);
  EXPECT_EQ(m.values[0], 3.0);
  for (std::size_t i = 1; i < 9; ++i) EXPECT_EQ(m.values[i], 0.0);
  for (double v : moment_vector(flat)) EXPECT_TRUE(std::isfinite(v));
}

TEST(Moments, MatchReferenceFormulas) {
  Rng rng(2);
  std::vector<double> x(50);
  for (auto& v : x) v = std::floor(rng.uniform() * 9.0);
  const auto got = moments(x).values;
  const auto want = reference_moments(x);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(got[i], want[i], 1e-12) << i;

  std::vector<double> d(49);
  for (std::size_t t = 0; t < 49; ++t) d[t] = std::abs(x[t + 1] - x[t]);
  const auto full = moment_vector(x);
  const auto want_d = reference_moments(d);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(full[9 + i], want_d[i], 1e-12);
}

TEST(Moments, TranslationInvariance) {
  Rng rng(3);
  std::vector<double> x(40), y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    x[i] = rng.uniform();
    y[i] = x[i] + 2.5;
  }
  const auto a = moments(x).values, b = moments(y).values;
  EXPECT_NEAR(b[0] - a[0], 2.5, 1e-12);
  for (std::size_t i = 1; i < 9; ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(Moments, AlternatingSeries) {
  std::vector<double> x(64);
  for (std::size_t i = 0; i < 64; ++i) x[i] = static_cast<double>(i % 2);
  // Direct evaluation: sum over 63 lagged products of -1/4, divided by 64 * 1/4.
  EXPECT_NEAR(moments(x).values[4], -63.0 / 64.0, 1e-12);
}

TEST(Moments, ShortSeriesTruncatedLags) {
  bool truncated = false;
  const auto v = moment_vector(std::vector<double>{1, 2, 4, 3}, &truncated);
  EXPECT_TRUE(truncated);
  EXPECT_EQ(v[4 + 4], 0.0);  // lag 5 unavailable
  for (double e : v) EXPECT_TRUE(std::isfinite(e));
  moment_vector(std::vector<double>(10, 1.0), &truncated);
  EXPECT_FALSE(truncated);
}

TEST(MsmLoss, BasicProperties) {
  SummarySeries a{{1, 3, 2, 5, 4, 4, 2, 1}, std::nullopt, std::nullopt};
  SummarySeries b{{2, 2, 2, 6, 1, 0, 3, 3}, std::nullopt, std::nullopt};
  EXPECT_EQ(msm_loss(a, a), 0.0);
  EXPECT_EQ(msm_loss(a, b), msm_loss(b, a));
  EXPECT_GT(msm_loss(a, b), 0.0);
}

TEST(MsmLoss, NoisyIsSumOfThree) {
  SummarySeries a{{1, 3, 2, 5, 4, 4}, std::vector<double>{0.5, 0.25, 0.5, 1, 0, 0.75},
                  std::vector<double>{0.25, 0.1875, 0.25, 0, 0, 0.1875}};
  SummarySeries b{{2, 2, 3, 1, 0, 1}, std::vector<double>{0.75, 0.5, 0.25, 0.5, 0.5, 1},
                  std::vector<double>{0.1875, 0.25, 0.1875, 0.25, 0.25, 0}};
  const auto single = [](const std::vector<double>& x, const std::vector<double>& y) {
    return msm_loss(SummarySeries{x, std::nullopt, std::nullopt}, SummarySeries{y, std::nullopt, std::nullopt});
  };
  EXPECT_NEAR(msm_loss(a, b), single(a.w, b.w) + single(*a.gamma0, *b.gamma0) + single(*a.gamma1, *b.gamma1), 1e-15);
  EXPECT_THROW(msm_loss(a, SummarySeries{a.w, std::nullopt, std::nullopt}), std::invalid_argument);
}

TEST(MsmLoss, FiniteOnFlatSeries) {
  SummarySeries flat{std::vector<double>(30, 0.0), std::nullopt, std::nullopt};
  SummarySeries other{std::vector<double>(30, 8.0), std::nullopt, std::nullopt};
  EXPECT_TRUE(std::isfinite(msm_loss(flat, other)));
}

TEST(Simulate, DeterministicAndValidated) {
  const auto p = desk(32, 4, 4);
  const auto tr = simulate_trace(p, 1);
  for (auto k : {ScenarioKind::full, ScenarioKind::partial, ScenarioKind::noisy}) {
    const auto obs = observe(tr, k);
    EXPECT_EQ(simulate_for_msm(obs, 0.2, p, 5), simulate_for_msm(obs, 0.2, p, 5));
    EXPECT_THROW(simulate_for_msm(obs, 0.6, p, 5), std::invalid_argument);
    const auto s = simulate_for_msm(obs, 0.2, p, 5);
    EXPECT_EQ(s.w.size(), 32u);
    for (double w : s.w) {
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 4.0);
    }
    EXPECT_EQ(s.gamma0.has_value(), k == ScenarioKind::noisy);
  }
}

TEST(Simulate, FullTeacherForcedMeanMatchesObserved) {
  // Same Bernoulli means as the generator, so the average simulated count
  // approaches the expected observed count.
  const auto p = desk(256, 8);
  const auto tr = simulate_trace(p, 2);
  const auto obs = observe(tr, ScenarioKind::full);
  double expected = 0.0;
  for (std::size_t t = 0; t < p.n_steps; ++t)
    for (std::size_t j = 0; j < p.edges_per_step; ++j) {
      const auto [u, v] = tr.schedule(t, j);
      expected += interaction_prob(tr.trajectory(t, u), tr.trajectory(t, v), p.epsilon, p.rho);
    }
  double sim = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto w = simulate_for_msm(obs, p.epsilon, p, s).w;
    sim += std::accumulate(w.begin(), w.end(), 0.0) / 100.0;
  }
  EXPECT_NEAR(sim, expected, 0.01 * expected);
}

TEST(Simulate, MonotoneInEpsilon) {
  const auto p = desk(64, 8);
  const auto tr = simulate_trace(p, 3);
  for (auto k : {ScenarioKind::full, ScenarioKind::partial}) {
    const auto obs = observe(tr, k);
    double lo = 0.0, hi = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto a = simulate_for_msm(obs, 0.0, p, s).w;
      const auto b = simulate_for_msm(obs, 0.5, p, s).w;
      lo += std::accumulate(a.begin(), a.end(), 0.0);
      hi += std::accumulate(b.begin(), b.end(), 0.0);
    }
    EXPECT_LT(lo, hi);
  }
}

TEST(EstimateMsm, SingleSimulationPicksFirstHaltonPoint) {
  const auto p = desk(16, 4);
  const auto r = estimate_msm(observe(simulate_trace(p, 1), ScenarioKind::full), p, MsmConfig{1, {}, 3});
  EXPECT_EQ(r.epsilon_hat, 0.25);
  EXPECT_EQ(r.loss_history.size(), 1u);
  EXPECT_FALSE(r.degenerate);
  EXPECT_FALSE(r.x0_hat.has_value());
}

TEST(EstimateMsm, ForcedArgmin) {
  const auto p = desk(32, 4);
  const auto obs = observe(simulate_trace(p, 1), ScenarioKind::full);
  const auto target = observed_summary(obs);
  const auto cand = halton_points(50, {});
  const double forced = cand[17];
  std::size_t calls = 0;
  auto sim = [&](double eps, std::uint64_t seed) {
    ++calls;
    if (eps == forced) return target;
    return simulate_for_msm(obs, eps, p, seed);
  };
  const auto r = estimate_msm_with(obs, MsmConfig{50, {}, 0}, sim);
  EXPECT_EQ(calls, 50u);
  EXPECT_EQ(r.epsilon_hat, forced);
  EXPECT_EQ(r.loss_history[17], 0.0);
}

TEST(EstimateMsm, TiesGoToLowestIndex) {
  const auto p = desk(16, 4);
  const auto obs = observe(simulate_trace(p, 1), ScenarioKind::full);
  const SummarySeries constant{std::vector<double>(16, 1.0), std::nullopt, std::nullopt};
  const auto r = estimate_msm_with(obs, MsmConfig{20, {}, 0}, [&](double, std::uint64_t) { return constant; });
  EXPECT_EQ(r.epsilon_hat, halton_points(1, {})[0]);
}

TEST(EstimateMsm, Deterministic) {
  const auto p = desk(32, 4, 4);
  const auto tr = simulate_trace(p, 4);
  for (auto k : {ScenarioKind::full, ScenarioKind::partial, ScenarioKind::noisy}) {
    const auto a = estimate_msm(observe(tr, k), p, MsmConfig{40, {}, 2});
    const auto b = estimate_msm(observe(tr, k), p, MsmConfig{40, {}, 2});
    EXPECT_EQ(a.loss_history, b.loss_history);
    EXPECT_EQ(a.epsilon_hat, b.epsilon_hat);
  }
}

TEST(EstimateMsm, AveragedLossCurveBottomsOutNearTruth) {
  // One simulation per candidate is noisy; averaging replicate curves shows
  // the expected loss is smallest close to the true epsilon.
  const auto p = desk(128, 8);
  const auto obs = observe(simulate_trace(p, 5), ScenarioKind::full);
  const auto cand = halton_points(200, {});
  std::vector<double> avg(200, 0.0);
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const auto r = estimate_msm(obs, p, MsmConfig{200, {}, rep});
    for (std::size_t i = 0; i < 200; ++i) avg[i] += r.loss_history[i];
  }
  const auto best = std::ranges::min_element(avg) - avg.begin();
  EXPECT_NEAR(cand[best], 0.3, 0.03);
}

TEST(EstimateMsm, LessAccurateThanMlOnFullData) {
  const auto p = desk(128, 8);
  std::vector<double> ml, msm;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto obs = observe(simulate_trace(p, s), ScenarioKind::full);
    ml.push_back(std::abs(estimate_ml(obs, p, s).epsilon_hat - 0.3));
    msm.push_back(std::abs(estimate_msm(obs, p, MsmConfig{200, {}, s}).epsilon_hat - 0.3));
  }
  std::ranges::sort(ml);
  std::ranges::sort(msm);
  EXPECT_LT(ml[9] + ml[10], msm[9] + msm[10]);
}

TEST(EstimateMsm, DegenerateInputs) {
  ModelParams p;
  p.n_agents = 5;
  const FullObservation empty{5, Opinions(5, 0.5), Grid<InteractionPair>(8, 0), Grid<std::uint8_t>(8, 0)};
  const auto r = estimate_msm(empty, p, MsmConfig{});
  EXPECT_TRUE(r.degenerate);
  for (double l : r.loss_history) EXPECT_TRUE(std::isfinite(l));
  EXPECT_THROW(estimate_msm(empty, p, MsmConfig{0, {}, 0}), std::invalid_argument);
}
