#pragma once

// Stochastic bounded-confidence model: parameters, the interaction kernel,
// the pairwise update, trace generation, and trajectory reconstruction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bcm/grid.hpp"
#include "bcm/rng.hpp"

namespace bcm {

using Opinions = std::vector<double>;

struct ModelParams {
  double epsilon = 0.25;  ///< confidence bound, target of calibration
  double mu = 0.1;        ///< convergence rate
  double rho = 16.0;      ///< sigmoid steepness
  std::size_t n_agents = 100;
  std::size_t n_steps = 16;
  std::size_t edges_per_step = 4;
  std::size_t proxies_per_step = 0;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 0.5)) throw std::invalid_argument("epsilon must lie in [0, 0.5]");
    if (!(mu > 0.0 && mu <= 0.5)) throw std::invalid_argument("mu must lie in (0, 0.5]");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be positive and finite");
    if (n_agents == 0) throw std::invalid_argument("n_agents must be positive");
    if (n_steps == 0) throw std::invalid_argument("n_steps must be positive");
    if (edges_per_step == 0) throw std::invalid_argument("edges_per_step must be positive");
    if (proxies_per_step > n_agents) throw std::invalid_argument("proxies_per_step cannot exceed n_agents");
  }

  bool operator==(const ModelParams&) const = default;
};

struct InteractionPair {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  bool operator==(const InteractionPair&) const = default;
};

/// One noisy binary observation of an agent's opinion.
struct Proxy {
  std::uint32_t agent = 0;
  std::uint8_t label = 0;
  bool operator==(const Proxy&) const = default;
};

// Numerically stable logistic helpers.
inline double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(sigmoid(z)) without overflow or cancellation.
inline double log_sigmoid(double z) noexcept {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

inline double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

/// Probability that an interaction between opinions x_u and x_v is positive.
inline double interaction_prob(double x_u, double x_v, double epsilon, double rho) noexcept {
  return sigmoid(rho * (epsilon - std::abs(x_u - x_v)));
}

/// In-place pairwise update. Both agents read pre-update opinions.
inline void apply_update_inplace(std::span<double> x, InteractionPair pair, bool sign, double mu) {
  if (!sign || pair.u == pair.v) return;
  const double xu = x[pair.u];
  const double xv = x[pair.v];
  x[pair.u] = xu + mu * (xv - xu);
  x[pair.v] = xv + mu * (xu - xv);
}

inline Opinions apply_update(Opinions x, InteractionPair pair, bool sign, double mu) {
  if (pair.u >= x.size() || pair.v >= x.size()) throw std::out_of_range("apply_update: agent index out of range");
  apply_update_inplace(x, pair, sign, mu);
  return x;
}

/// A full ground-truth realization. The trajectory has n_steps + 1 rows;
/// row t holds opinions before the interactions of step t.
struct Trace {
  ModelParams params;
  std::uint64_t seed = 0;
  Opinions x0;
  Grid<InteractionPair> schedule;  // n_steps x edges_per_step
  Grid<std::uint8_t> signs;        // n_steps x edges_per_step
  Grid<Proxy> proxies;             // n_steps x proxies_per_step
  Grid<double> trajectory;         // (n_steps + 1) x n_agents

  bool operator==(const Trace&) const = default;
};

/// Sequential replay: within step t, signs were drawn from row t and the
/// positive updates are applied in schedule order.
inline Grid<double> replay_trajectory(std::span<const double> x0, const Grid<InteractionPair>& schedule,
                                      const Grid<std::uint8_t>& signs, double mu) {
  if (schedule.rows() != signs.rows() || schedule.cols() != signs.cols())
    throw std::invalid_argument("replay_trajectory: schedule and signs shapes differ");
  const std::size_t n = x0.size();
  Grid<double> traj(schedule.rows() + 1, n);
  std::copy(x0.begin(), x0.end(), traj.row(0).begin());
  for (std::size_t t = 0; t < schedule.rows(); ++t) {
    auto next = traj.row(t + 1);
    std::ranges::copy(traj.row(t), next.begin());
    for (std::size_t j = 0; j < schedule.cols(); ++j) {
      const auto pair = schedule(t, j);
      if (pair.u >= n || pair.v >= n) throw std::out_of_range("replay_trajectory: agent index out of range");
      apply_update_inplace(next, pair, signs(t, j) != 0, mu);
    }
  }
  return traj;
}

/// Draws a trace. Pure function of (params, seed); see rng.hpp for the
/// stream layout.
inline Trace simulate_trace(const ModelParams& params, std::uint64_t seed) {
  params.validate();
  const std::size_t n = params.n_agents;
  const std::size_t steps = params.n_steps;
  const std::size_t m = params.edges_per_step;
  const std::size_t k = params.proxies_per_step;

  Rng rng(derive_seed(seed, {stream::trace}));
  Trace tr;
  tr.params = params;
  tr.seed = seed;
  tr.x0.resize(n);
  for (auto& x : tr.x0) x = rng.uniform();

  tr.schedule = Grid<InteractionPair>(steps, m);
  tr.signs = Grid<std::uint8_t>(steps, m);
  tr.proxies = Grid<Proxy>(steps, k);
  tr.trajectory = Grid<double>(steps + 1, n);
  std::ranges::copy(tr.x0, tr.trajectory.row(0).begin());

  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);

  for (std::size_t t = 0; t < steps; ++t) {
    const auto start = tr.trajectory.row(t);
    auto next = tr.trajectory.row(t + 1);
    std::ranges::copy(start, next.begin());
    for (std::size_t j = 0; j < m; ++j) {
      const InteractionPair pair{static_cast<std::uint32_t>(rng.uniform_index(n)),
                                 static_cast<std::uint32_t>(rng.uniform_index(n))};
      const double p = interaction_prob(start[pair.u], start[pair.v], params.epsilon, params.rho);
      const bool s = rng.bernoulli(p);
      tr.schedule(t, j) = pair;
      tr.signs(t, j) = s ? 1 : 0;
      apply_update_inplace(next, pair, s, params.mu);
    }
    // k distinct agents by partial Fisher-Yates; each reports Bernoulli(opinion after the step).
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t pick = i + rng.uniform_index(n - i);
      std::swap(perm[i], perm[pick]);
      const std::uint32_t agent = perm[i];
      tr.proxies(t, i) = Proxy{agent, static_cast<std::uint8_t>(rng.bernoulli(next[agent]) ? 1 : 0)};
    }
  }
  return tr;
}

/// Positive-interaction adjacency per step, stored sparsely as deduplicated
/// unordered pairs (u < v). Self-pairs are dropped since they do not move
/// opinions.
class PositiveAdjacency {
 public:
  PositiveAdjacency() = default;
  PositiveAdjacency(const Grid<InteractionPair>& schedule, const Grid<std::uint8_t>& signs, std::size_t n_agents)
      : n_agents_(n_agents), edges_(schedule.rows()) {
    if (schedule.rows() != signs.rows() || schedule.cols() != signs.cols())
      throw std::invalid_argument("PositiveAdjacency: schedule and signs shapes differ");
    for (std::size_t t = 0; t < schedule.rows(); ++t) {
      auto& e = edges_[t];
      for (std::size_t j = 0; j < schedule.cols(); ++j) {
        if (!signs(t, j)) continue;
        auto [u, v] = schedule(t, j);
        if (u >= n_agents || v >= n_agents) throw std::out_of_range("PositiveAdjacency: agent index out of range");
        if (u == v) continue;
        if (u > v) std::swap(u, v);
        const InteractionPair p{u, v};
        if (std::ranges::find(e, p) == e.end()) e.push_back(p);
      }
    }
  }

  std::size_t steps() const noexcept { return edges_.size(); }
  std::size_t n_agents() const noexcept { return n_agents_; }
  std::span<const InteractionPair> edges(std::size_t t) const { return edges_[t]; }

  bool contains(std::size_t t, std::uint32_t u, std::uint32_t v) const {
    if (u > v) std::swap(u, v);
    return u != v && std::ranges::find(edges_[t], InteractionPair{u, v}) != edges_[t].end();
  }

  /// True if some agent touches more than one positive edge in step t; the
  /// batched and sequential updates then differ.
  bool has_repeated_agent(std::size_t t) const {
    std::vector<std::uint32_t> seen;
    for (const auto& e : edges_[t]) {
      for (auto a : {e.u, e.v}) {
        if (std::ranges::find(seen, a) != seen.end()) return true;
        seen.push_back(a);
      }
    }
    return false;
  }

 private:
  std::size_t n_agents_ = 0;
  std::vector<std::vector<InteractionPair>> edges_;
};

/// Batched step: every agent moves by mu times the sum of its positive
/// neighbours' offsets, all read from the start-of-step opinions.
inline void batched_step(std::span<const double> cur, std::span<double> next, std::span<const InteractionPair> edges,
                         double mu) {
  std::ranges::copy(cur, next.begin());
  for (const auto& e : edges) {
    const double diff = cur[e.v] - cur[e.u];
    next[e.u] += mu * diff;
    next[e.v] -= mu * diff;
  }
}

inline Grid<double> batched_trajectory(std::span<const double> x0, const PositiveAdjacency& adj, double mu) {
  if (x0.size() != adj.n_agents()) throw std::invalid_argument("batched_trajectory: x0 length mismatch");
  Grid<double> traj(adj.steps() + 1, x0.size());
  std::ranges::copy(x0, traj.row(0).begin());
  for (std::size_t t = 0; t < adj.steps(); ++t) batched_step(traj.row(t), traj.row(t + 1), adj.edges(t), mu);
  return traj;
}

/// Deterministic trajectory X_0..X_T from X_0 using the batched update.
inline Grid<double> trajectory_from_x0(std::span<const double> x0, const Grid<InteractionPair>& schedule,
                                       const Grid<std::uint8_t>& signs, double mu) {
  return batched_trajectory(x0, PositiveAdjacency(schedule, signs, x0.size()), mu);
}

}  // namespace bcm
