#include <gtest/gtest.h>

#include "bcm/scenarios.hpp"

using namespace bcm;

namespace {

Trace make_trace(std::uint64_t seed, std::size_t k = 3) {
  ModelParams p;
  p.n_agents = 30;
  p.n_steps = 20;
  p.edges_per_step = 5;
  p.proxies_per_step = k;
  return simulate_trace(p, seed);
}

}  // namespace

TEST(Observe, FullIsLossless) {
  const auto tr = make_trace(1);
  const auto obs = std::get<FullObservation>(observe(tr, ScenarioKind::full));
  EXPECT_EQ(obs.x0, tr.x0);
  EXPECT_EQ(obs.schedule, tr.schedule);
  EXPECT_EQ(obs.signs, tr.signs);
  EXPECT_EQ(observed_trajectory(obs, tr.params.mu), tr.trajectory);
}

TEST(Observe, PartialMasksExactlyTheNegatives) {
  const auto tr = make_trace(2);
  const auto obs = std::get<PartialObservation>(observe(tr, ScenarioKind::partial));
  std::size_t nulls = 0, zeros = 0;
  for (std::size_t t = 0; t < tr.signs.rows(); ++t)
    for (std::size_t j = 0; j < tr.signs.cols(); ++j) {
      EXPECT_EQ(obs.signs(t, j), tr.signs(t, j));
      zeros += tr.signs(t, j) == 0;
      if (!obs.schedule(t, j)) {
        ++nulls;
        EXPECT_EQ(tr.signs(t, j), 0);
      } else {
        EXPECT_EQ(*obs.schedule(t, j), tr.schedule(t, j));
      }
    }
  EXPECT_EQ(nulls, zeros);
  // Negative interactions never move opinions, so the trajectory is recoverable.
  EXPECT_EQ(observed_trajectory(obs, tr.params.mu), tr.trajectory);
}

TEST(Observe, PartialAllPositiveAndAllNegative) {
  auto tr = make_trace(3);
  for (auto& s : tr.signs.data()) s = 1;
  tr.trajectory = replay_trajectory(tr.x0, tr.schedule, tr.signs, tr.params.mu);
  const auto pos = std::get<PartialObservation>(observe(tr, ScenarioKind::partial));
  for (std::size_t i = 0; i < tr.schedule.size(); ++i) EXPECT_EQ(*pos.schedule.data()[i], tr.schedule.data()[i]);

  for (auto& s : tr.signs.data()) s = 0;
  const auto neg = std::get<PartialObservation>(observe(tr, ScenarioKind::partial));
  for (const auto& e : neg.schedule.data()) EXPECT_FALSE(e.has_value());
}

TEST(Observe, NoisyDropsOpinions) {
  const auto tr = make_trace(4);
  const auto obs = observe(tr, ScenarioKind::noisy);
  ASSERT_EQ(kind_of(obs), ScenarioKind::noisy);
  const auto& n = std::get<NoisyObservation>(obs);
  EXPECT_EQ(n.schedule, tr.schedule);
  EXPECT_EQ(n.signs, tr.signs);
  EXPECT_EQ(n.proxies, tr.proxies);
  EXPECT_EQ(n.n_agents, 30u);
}

TEST(Observe, NoisyWithoutProxiesRejected) {
  const auto tr = make_trace(5, 0);
  EXPECT_THROW(observe(tr, ScenarioKind::noisy), std::invalid_argument);
}

TEST(ScenarioKind, ParseRoundTrip) {
  for (auto k : {ScenarioKind::full, ScenarioKind::partial, ScenarioKind::noisy})
    EXPECT_EQ(parse_scenario(to_string(k)), k);
  EXPECT_THROW(parse_scenario("bogus"), std::invalid_argument);
}

TEST(Observe, InformationContent) {
  const auto tr = make_trace(6);
  EXPECT_TRUE(carries_information(observe(tr, ScenarioKind::full)));
  const FullObservation empty{5, Opinions(5, 0.5), Grid<InteractionPair>(4, 0), Grid<std::uint8_t>(4, 0)};
  EXPECT_FALSE(carries_information(empty));
  EXPECT_EQ(n_steps_of(empty), 4u);
}
