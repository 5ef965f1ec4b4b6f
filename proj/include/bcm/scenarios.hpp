#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "bcm/grid.hpp"
#include "bcm/model.hpp"

namespace bcm {

enum class ScenarioKind { full, partial, noisy };

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::full: return "full";
    case ScenarioKind::partial: return "partial";
    case ScenarioKind::noisy: return "noisy";
  }
  return "unknown";
}

inline ScenarioKind parse_scenario(std::string_view s) {
  if (s == "full") return ScenarioKind::full;
  if (s == "partial") return ScenarioKind::partial;
  if (s == "noisy") return ScenarioKind::noisy;
  throw std::invalid_argument("unknown scenario '" + std::string(s) + "' (expected full|partial|noisy)");
}

/// BCM-F: initial opinions, all pairs and all signs.
struct FullObservation {
  std::size_t n_agents = 0;
  Opinions x0;
  Grid<InteractionPair> schedule;
  Grid<std::uint8_t> signs;
};

/// BCM-P: pair identities only where the sign is positive.
struct PartialObservation {
  std::size_t n_agents = 0;
  Opinions x0;
  Grid<std::optional<InteractionPair>> schedule;
  Grid<std::uint8_t> signs;
};

/// BCM-N: pairs, signs and binary proxies; opinions are latent.
struct NoisyObservation {
  std::size_t n_agents = 0;
  Grid<InteractionPair> schedule;
  Grid<std::uint8_t> signs;
  Grid<Proxy> proxies;
};

using ObservedData = std::variant<FullObservation, PartialObservation, NoisyObservation>;

inline ScenarioKind kind_of(const ObservedData& obs) { return static_cast<ScenarioKind>(obs.index()); }

inline std::size_t n_steps_of(const ObservedData& obs) {
  return std::visit([](const auto& o) { return o.signs.rows(); }, obs);
}

inline ObservedData observe(const Trace& trace, ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::full:
      return FullObservation{trace.params.n_agents, trace.x0, trace.schedule, trace.signs};
    case ScenarioKind::partial: {
      Grid<std::optional<InteractionPair>> masked(trace.schedule.rows(), trace.schedule.cols());
      for (std::size_t t = 0; t < masked.rows(); ++t)
        for (std::size_t j = 0; j < masked.cols(); ++j)
          if (trace.signs(t, j)) masked(t, j) = trace.schedule(t, j);
      return PartialObservation{trace.params.n_agents, trace.x0, std::move(masked), trace.signs};
    }
    case ScenarioKind::noisy:
      if (trace.proxies.cols() == 0)
        throw std::invalid_argument("noisy scenario requires proxies_per_step > 0 (no information about X0 otherwise)");
      return NoisyObservation{trace.params.n_agents, trace.schedule, trace.signs, trace.proxies};
  }
  throw std::invalid_argument("observe: unknown scenario");
}

/// False when the data holds no interactions and no proxies.
inline bool carries_information(const ObservedData& obs) {
  return std::visit(
      [](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, NoisyObservation>) return o.signs.size() + o.proxies.size() > 0;
        else return o.signs.size() > 0;
      },
      obs);
}

/// Schedule with masked entries replaced by a self-pair. Masked entries always
/// carry sign 0, so the replacement never moves an opinion.
inline Grid<InteractionPair> fill_masked(const PartialObservation& obs) {
  Grid<InteractionPair> filled(obs.schedule.rows(), obs.schedule.cols());
  for (std::size_t i = 0; i < filled.size(); ++i)
    filled.data()[i] = obs.schedule.data()[i].value_or(InteractionPair{0, 0});
  return filled;
}

/// Opinion trajectory recovered from observed data (BCM-F and BCM-P only).
inline Grid<double> observed_trajectory(const FullObservation& obs, double mu) {
  return replay_trajectory(obs.x0, obs.schedule, obs.signs, mu);
}

inline Grid<double> observed_trajectory(const PartialObservation& obs, double mu) {
  return replay_trajectory(obs.x0, fill_masked(obs), obs.signs, mu);
}

}  // namespace bcm
