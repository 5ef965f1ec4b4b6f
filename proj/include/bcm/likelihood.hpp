#pragma once

// Scenario log-likelihoods with exact gradients in the unconstrained
// parameterization: epsilon = sigmoid(theta) / 2 and X0 = sigmoid(theta_x0).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bcm/grid.hpp"
#include "bcm/model.hpp"
#include "bcm/rng.hpp"
#include "bcm/scenarios.hpp"

namespace bcm {

struct ReparamState {
  double theta_eps = 0.0;
  std::optional<std::vector<double>> theta_x0;

  double epsilon() const noexcept { return 0.5 * sigmoid(theta_eps); }
  /// d epsilon / d theta
  double epsilon_jacobian() const noexcept {
    const double s = sigmoid(theta_eps);
    return 0.5 * s * (1.0 - s);
  }
};

inline double encode_epsilon(double epsilon) { return logit(2.0 * epsilon); }

/// X0 decoded from theta_x0; the reflected orientation is 1 - X0.
inline Opinions decode_x0(std::span<const double> theta_x0, bool reflected = false) {
  Opinions x(theta_x0.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = sigmoid(reflected ? -theta_x0[i] : theta_x0[i]);
  return x;
}

struct LogLikValue {
  double value = 0.0;
  double grad_theta_eps = 0.0;
  std::optional<std::vector<double>> grad_theta_x0;
};

namespace detail {

/// log P(s | z) for s ~ Bernoulli(sigmoid(z)) together with sigmoid(z),
/// using a single exp and log1p.
struct SignTerm {
  double log_prob;
  double kappa;
};

inline SignTerm sign_term(double z, bool s) noexcept {
  const double e = std::exp(-std::abs(z));
  const double l1p = std::log1p(e);
  const double kappa = z >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  const double log_k = z >= 0.0 ? -l1p : z - l1p;  // log sigmoid(z)
  return {s ? log_k : log_k - z, kappa};
}

inline constexpr double kLogFloor = 1e-300;

}  // namespace detail

// ---------------------------------------------------------------------------
// BCM-F

/// Objective for the fully observed scenario. The trajectory is replayed once
/// at construction; each evaluation is a single pass over the interactions.
class FullLikelihood {
 public:
  FullLikelihood(const FullObservation& obs, const ModelParams& params) : rho_(params.rho) {
    const auto traj = observed_trajectory(obs, params.mu);
    dist_.reserve(obs.signs.size());
    sign_.reserve(obs.signs.size());
    for (std::size_t t = 0; t < obs.schedule.rows(); ++t) {
      const auto x = traj.row(t);
      for (std::size_t j = 0; j < obs.schedule.cols(); ++j) {
        const auto [u, v] = obs.schedule(t, j);
        dist_.push_back(std::abs(x[u] - x[v]));
        sign_.push_back(obs.signs(t, j));
      }
    }
  }

  std::size_t n_interactions() const noexcept { return dist_.size(); }

  LogLikValue evaluate(const ReparamState& state) const {
    const double eps = state.epsilon();
    double value = 0.0;
    double d_eps = 0.0;
    for (std::size_t j = 0; j < dist_.size(); ++j) {
      const bool s = sign_[j] != 0;
      const auto term = detail::sign_term(rho_ * (eps - dist_[j]), s);
      value += term.log_prob;
      d_eps += (s ? 1.0 : 0.0) - term.kappa;
    }
    return {value, rho_ * d_eps * state.epsilon_jacobian(), std::nullopt};
  }

 private:
  double rho_;
  std::vector<double> dist_;
  std::vector<std::uint8_t> sign_;
};

inline LogLikValue loglik_full(const FullObservation& obs, const ReparamState& state, const ModelParams& params) {
  return FullLikelihood(obs, params).evaluate(state);
}

// ---------------------------------------------------------------------------
// BCM-P

enum class PairMode { automatic, exact, sampled };

struct PartialOptions {
  std::size_t pair_sample_size = 64;
  PairMode mode = PairMode::automatic;
  std::uint64_t seed = 0;
  /// automatic mode enumerates all ordered pairs when N^2 is at most this.
  std::size_t exact_threshold = 4096;
};

/// Objective for the partially observed scenario. Negative interactions are
/// marginalized over the unknown pair: each contributes
/// log(mean over pairs e of (1 - kappa(e))), with one mean shared by all
/// negative signs of a timestep. The constant pair probability is dropped, so
/// values are log-likelihoods up to an additive constant.
class PartialLikelihood {
 public:
  PartialLikelihood(const PartialObservation& obs, const ModelParams& params, PartialOptions options = {})
      : rho_(params.rho), n_(obs.n_agents), options_(options), traj_(observed_trajectory(obs, params.mu)) {
    if (options_.pair_sample_size == 0) throw std::invalid_argument("pair_sample_size must be at least 1");
    exact_ = options_.mode == PairMode::exact ||
             (options_.mode == PairMode::automatic && n_ * n_ <= options_.exact_threshold);
    negatives_.assign(obs.signs.rows(), 0);
    for (std::size_t t = 0; t < obs.signs.rows(); ++t) {
      const auto x = traj_.row(t);
      for (std::size_t j = 0; j < obs.signs.cols(); ++j) {
        if (obs.signs(t, j)) {
          const auto [u, v] = *obs.schedule(t, j);
          pos_dist_.push_back(std::abs(x[u] - x[v]));
        } else {
          ++negatives_[t];
        }
      }
    }
  }

  bool exact() const noexcept { return exact_; }

  /// `epoch` selects the pair-sample substream in sampled mode.
  LogLikValue evaluate(const ReparamState& state, std::uint64_t epoch = 0) const {
    const double eps = state.epsilon();
    double value = 0.0;
    double d_eps = 0.0;
    for (double d : pos_dist_) {
      const auto term = detail::sign_term(rho_ * (eps - d), true);
      value += term.log_prob;
      d_eps += rho_ * (1.0 - term.kappa);
    }
    for (std::size_t t = 0; t < negatives_.size(); ++t) {
      if (negatives_[t] == 0) continue;
      const auto [mean, d_mean] = exact_ ? exact_mean(t, eps) : sampled_mean(t, eps, epoch);
      const double c = static_cast<double>(negatives_[t]);
      if (mean > detail::kLogFloor) {
        value += c * std::log(mean);
        d_eps += c * d_mean / mean;
      } else {
        value += c * std::log(detail::kLogFloor);
      }
    }
    return {value, d_eps * state.epsilon_jacobian(), std::nullopt};
  }

 private:
  struct MeanAndSlope {
    double mean;   // mean of 1 - kappa
    double slope;  // its derivative in epsilon
  };

  // Ordered pairs over V^2: (u, v) and (v, u) share a distance and the diagonal
  // has distance zero.
  MeanAndSlope exact_mean(std::size_t t, double eps) const {
    const auto x = traj_.row(t);
    const double k0 = sigmoid(rho_ * eps);
    double sum = static_cast<double>(n_) * (1.0 - k0);
    double slope = -static_cast<double>(n_) * rho_ * k0 * (1.0 - k0);
    for (std::size_t u = 0; u < n_; ++u) {
      for (std::size_t v = u + 1; v < n_; ++v) {
        const double k = sigmoid(rho_ * (eps - std::abs(x[u] - x[v])));
        sum += 2.0 * (1.0 - k);
        slope -= 2.0 * rho_ * k * (1.0 - k);
      }
    }
    const double total = static_cast<double>(n_ * n_);
    return {sum / total, slope / total};
  }

  MeanAndSlope sampled_mean(std::size_t t, double eps, std::uint64_t epoch) const {
    const auto x = traj_.row(t);
    Rng rng(derive_seed(options_.seed, {stream::pair_sample, epoch, t}));
    double sum = 0.0;
    double slope = 0.0;
    for (std::size_t i = 0; i < options_.pair_sample_size; ++i) {
      const auto u = rng.uniform_index(n_);
      const auto v = rng.uniform_index(n_);
      const double k = sigmoid(rho_ * (eps - std::abs(x[u] - x[v])));
      sum += 1.0 - k;
      slope -= rho_ * k * (1.0 - k);
    }
    const double s = static_cast<double>(options_.pair_sample_size);
    return {sum / s, slope / s};
  }

  double rho_;
  std::size_t n_;
  PartialOptions options_;
  bool exact_ = false;
  Grid<double> traj_;
  std::vector<double> pos_dist_;
  std::vector<std::size_t> negatives_;
};

inline LogLikValue loglik_partial(const PartialObservation& obs, const ReparamState& state, const ModelParams& params,
                                  std::size_t pair_sample_size, std::uint64_t rng_seed,
                                  PairMode mode = PairMode::automatic) {
  PartialOptions opt;
  opt.pair_sample_size = pair_sample_size;
  opt.seed = rng_seed;
  opt.mode = mode;
  return PartialLikelihood(obs, params, opt).evaluate(state, 0);
}

// ---------------------------------------------------------------------------
// BCM-N

struct SymmetricLogLik {
  LogLikValue value;
  bool reflected = false;  ///< true if the 1 - X0 orientation won
};

/// Objective for the noisy-proxy scenario: sign factor plus proxy factor on
/// the batched trajectory X_t = f_t(X0). Gradients with respect to theta_x0
/// come from the transposed recursion run backward over the stored forward
/// trajectory. The update matrix I + mu (A_t - D_t) is symmetric, so the
/// backward step reuses the forward edge list.
class NoisyLikelihood {
 public:
  NoisyLikelihood(const NoisyObservation& obs, const ModelParams& params)
      : rho_(params.rho),
        mu_(params.mu),
        n_(obs.n_agents),
        schedule_(obs.schedule),
        signs_(obs.signs),
        proxies_(obs.proxies),
        adj_(obs.schedule, obs.signs, obs.n_agents) {
    if (proxies_.rows() != signs_.rows() && proxies_.size() != 0)
      throw std::invalid_argument("NoisyLikelihood: proxies and signs disagree on the number of steps");
    for (const auto& p : proxies_.data())
      if (p.agent >= n_) throw std::out_of_range("NoisyLikelihood: proxy agent out of range");
  }

  std::size_t n_agents() const noexcept { return n_; }

  /// Trajectory for the given X0 (exposed for checks against the generator).
  Grid<double> trajectory(std::span<const double> x0) const { return batched_trajectory(x0, adj_, mu_); }

  LogLikValue evaluate(const ReparamState& state, bool include_proxies = true, bool reflected = false) const {
    if (!state.theta_x0 || state.theta_x0->size() != n_)
      throw std::invalid_argument("NoisyLikelihood: theta_x0 must be present with one entry per agent");
    const auto& theta_x = *state.theta_x0;
    const Opinions x0 = decode_x0(theta_x, reflected);
    const Grid<double> traj = batched_trajectory(x0, adj_, mu_);
    Grid<double> adjoint(traj.rows(), n_, 0.0);

    const double eps = state.epsilon();
    double value = 0.0;
    double d_eps = 0.0;

    for (std::size_t t = 0; t < signs_.rows(); ++t) {
      const auto x = traj.row(t);
      auto g = adjoint.row(t);
      for (std::size_t j = 0; j < signs_.cols(); ++j) {
        const auto [u, v] = schedule_(t, j);
        const bool s = signs_(t, j) != 0;
        const double diff = x[u] - x[v];
        const auto term = detail::sign_term(rho_ * (eps - std::abs(diff)), s);
        value += term.log_prob;
        const double dz = (s ? 1.0 : 0.0) - term.kappa;
        d_eps += rho_ * dz;
        // d/d|diff| = -rho * dz; d|diff|/dx_u = sign(diff)
        const double dd = -rho_ * dz * (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0));
        g[u] += dd;
        g[v] -= dd;
      }
      if (!include_proxies || proxies_.cols() == 0) continue;
      const auto x_after = traj.row(t + 1);
      auto g_after = adjoint.row(t + 1);
      for (const auto& p : proxies_.row(t)) {
        const double xa = x_after[p.agent];
        if (xa <= 0.0 || xa >= 1.0) {
          value += std::log(detail::kLogFloor);
          continue;
        }
        if (p.label) {
          value += std::log(xa);
          g_after[p.agent] += 1.0 / xa;
        } else {
          value += std::log1p(-xa);
          g_after[p.agent] -= 1.0 / (1.0 - xa);
        }
      }
    }

    for (std::size_t t = adj_.steps(); t-- > 0;) {
      const auto next = adjoint.row(t + 1);
      auto g = adjoint.row(t);
      for (std::size_t i = 0; i < n_; ++i) g[i] += next[i];
      for (const auto& e : adj_.edges(t)) {
        const double diff = next[e.v] - next[e.u];
        g[e.u] += mu_ * diff;
        g[e.v] -= mu_ * diff;
      }
    }

    std::vector<double> grad_x(n_);
    const auto g0 = adjoint.row(0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double jac = x0[i] * (1.0 - x0[i]);
      grad_x[i] = g0[i] * (reflected ? -jac : jac);
    }
    return {value, d_eps * state.epsilon_jacobian(), std::move(grad_x)};
  }

  /// max(L(X0), L(1 - X0)) with the gradient of the winning branch; ties go
  /// to the unreflected branch.
  SymmetricLogLik evaluate_symmetric(const ReparamState& state) const {
    auto direct = evaluate(state, true, false);
    auto mirrored = evaluate(state, true, true);
    if (mirrored.value > direct.value) return {std::move(mirrored), true};
    return {std::move(direct), false};
  }

 private:
  double rho_;
  double mu_;
  std::size_t n_;
  Grid<InteractionPair> schedule_;
  Grid<std::uint8_t> signs_;
  Grid<Proxy> proxies_;
  PositiveAdjacency adj_;
};

inline LogLikValue loglik_noisy(const NoisyObservation& obs, const ReparamState& state, const ModelParams& params,
                                bool include_proxies = true) {
  return NoisyLikelihood(obs, params).evaluate(state, include_proxies);
}

inline SymmetricLogLik loglik_noisy_symmetric(const NoisyObservation& obs, const ReparamState& state,
                                              const ModelParams& params) {
  return NoisyLikelihood(obs, params).evaluate_symmetric(state);
}

}  // namespace bcm
