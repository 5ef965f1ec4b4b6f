#pragma once

// Method of Simulated Moments: Halton candidates over epsilon, per-scenario
// teacher-forced simulators, the 18-moment summary and the MSE moment loss.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "bcm/estimation.hpp"
#include "bcm/model.hpp"
#include "bcm/rng.hpp"
#include "bcm/scenarios.hpp"

namespace bcm {

struct Interval {
  double lo = 0.0;
  double hi = 0.5;
};

/// Base-2 radical inverse (van der Corput) of i.
inline double radical_inverse_base2(std::uint64_t i) noexcept {
  double result = 0.0;
  double f = 0.5;
  while (i) {
    if (i & 1u) result += f;
    i >>= 1;
    f *= 0.5;
  }
  return result;
}

/// First n points of the 1-D Halton sequence (indices 1..n), mapped onto range.
inline std::vector<double> halton_points(std::size_t n, Interval range) {
  if (n == 0) throw std::invalid_argument("halton_points: n must be at least 1");
  std::vector<double> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = range.lo + (range.hi - range.lo) * radical_inverse_base2(i + 1);
  return pts;
}

inline constexpr std::size_t kMaxLag = 5;

/// mean, variance, skewness, excess kurtosis, autocorrelation at lags 1..5.
struct HalfMoments {
  std::array<double, 9> values{};
  bool truncated = false;  ///< some lag exceeded the series length and was set to 0
};

/// Moments with population conventions (denominator n). A zero-variance
/// series has skewness, kurtosis and autocorrelations equal to 0.
inline HalfMoments moments(std::span<const double> series) {
  HalfMoments out;
  const std::size_t n = series.size();
  out.truncated = n <= kMaxLag;
  if (n == 0) return out;
  const double dn = static_cast<double>(n);
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / dn;
  double c2 = 0.0, c3 = 0.0, c4 = 0.0;
  for (double x : series) {
    const double d = x - mean;
    const double d2 = d * d;
    c2 += d2;
    c3 += d2 * d;
    c4 += d2 * d2;
  }
  c2 /= dn;
  c3 /= dn;
  c4 /= dn;
  out.values[0] = mean;
  if (c2 <= 1e-12 * std::max(1.0, mean * mean)) return out;
  out.values[1] = c2;
  out.values[2] = c3 / std::pow(c2, 1.5);
  out.values[3] = c4 / (c2 * c2) - 3.0;
  for (std::size_t lag = 1; lag <= kMaxLag && lag < n; ++lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += (series[t] - mean) * (series[t + lag] - mean);
    out.values[3 + lag] = acc / dn / c2;
  }
  return out;
}

using MomentVector = std::array<double, 18>;

/// Moments of the series followed by moments of |x_{t+1} - x_t|.
inline MomentVector moment_vector(std::span<const double> series, bool* truncated = nullptr) {
  std::vector<double> diffs;
  if (series.size() > 1) {
    diffs.resize(series.size() - 1);
    for (std::size_t t = 0; t + 1 < series.size(); ++t) diffs[t] = std::abs(series[t + 1] - series[t]);
  }
  const auto a = moments(series);
  const auto b = moments(diffs);
  if (truncated) *truncated = a.truncated || b.truncated;
  MomentVector v;
  std::ranges::copy(a.values, v.begin());
  std::ranges::copy(b.values, v.begin() + 9);
  return v;
}

/// Per-step series compared by the moment loss. gamma0/gamma1 (mean and
/// variance of the proxy labels per step) are present only for BCM-N.
struct SummarySeries {
  std::vector<double> w;
  std::optional<std::vector<double>> gamma0;
  std::optional<std::vector<double>> gamma1;

  bool operator==(const SummarySeries&) const = default;
};

inline double moment_mse(std::span<const double> a, std::span<const double> b) {
  const auto ma = moment_vector(a);
  const auto mb = moment_vector(b);
  double s = 0.0;
  for (std::size_t i = 0; i < ma.size(); ++i) s += (ma[i] - mb[i]) * (ma[i] - mb[i]);
  return s / static_cast<double>(ma.size());
}

/// MSE between the 18-moment vectors of w; for BCM-N the sum of the three
/// per-series MSEs.
inline double msm_loss(const SummarySeries& observed, const SummarySeries& simulated) {
  if (observed.gamma0.has_value() != simulated.gamma0.has_value() ||
      observed.gamma1.has_value() != simulated.gamma1.has_value())
    throw std::invalid_argument("msm_loss: summary series describe different scenarios");
  double loss = moment_mse(observed.w, simulated.w);
  if (observed.gamma0) loss += moment_mse(*observed.gamma0, *simulated.gamma0);
  if (observed.gamma1) loss += moment_mse(*observed.gamma1, *simulated.gamma1);
  return loss;
}

namespace detail {

inline void proxy_stats(std::span<const double> labels, double& mean, double& var) {
  mean = 0.0;
  var = 0.0;
  if (labels.empty()) return;
  const double k = static_cast<double>(labels.size());
  for (double y : labels) mean += y;
  mean /= k;
  for (double y : labels) var += (y - mean) * (y - mean);
  var /= k;
}

}  // namespace detail

inline SummarySeries observed_summary(const ObservedData& obs) {
  SummarySeries s;
  const auto& signs = std::visit([](const auto& o) -> const Grid<std::uint8_t>& { return o.signs; }, obs);
  s.w.resize(signs.rows());
  for (std::size_t t = 0; t < signs.rows(); ++t) {
    double w = 0.0;
    for (auto b : signs.row(t)) w += b;
    s.w[t] = w;
  }
  if (const auto* noisy = std::get_if<NoisyObservation>(&obs)) {
    const std::size_t steps = noisy->signs.rows();
    std::vector<double> g0(steps), g1(steps), labels;
    for (std::size_t t = 0; t < steps; ++t) {
      labels.clear();
      if (noisy->proxies.rows() > t)
        for (const auto& p : noisy->proxies.row(t)) labels.push_back(p.label);
      detail::proxy_stats(labels, g0[t], g1[t]);
    }
    s.gamma0 = std::move(g0);
    s.gamma1 = std::move(g1);
  }
  return s;
}

/// Per-scenario simulator used by MSM. Precomputes whatever the observed data
/// fixes (trajectory, distances), then produces one simulated SummarySeries
/// per (candidate, seed).
///
///  full     signs redrawn for the observed pairs on the observed trajectory
///  partial  m fresh pairs per step from V^2, signs drawn on the observed trajectory
///  noisy    X0 drawn uniform, evolved with the observed signs; signs redrawn for
///           the observed pairs and k fresh distinct agents emit proxies
class MsmSimulator {
 public:
  MsmSimulator(const ObservedData& obs, const ModelParams& params) : kind_(kind_of(obs)), params_(params) {
    switch (kind_) {
      case ScenarioKind::full: {
        const auto& o = std::get<FullObservation>(obs);
        const auto traj = observed_trajectory(o, params.mu);
        steps_ = o.signs.rows();
        width_ = o.signs.cols();
        dist_.resize(o.signs.size());
        for (std::size_t t = 0; t < steps_; ++t)
          for (std::size_t j = 0; j < width_; ++j) {
            const auto [u, v] = o.schedule(t, j);
            dist_[t * width_ + j] = std::abs(traj(t, u) - traj(t, v));
          }
        break;
      }
      case ScenarioKind::partial: {
        const auto& o = std::get<PartialObservation>(obs);
        traj_ = observed_trajectory(o, params.mu);
        steps_ = o.signs.rows();
        width_ = o.signs.cols();
        n_ = o.n_agents;
        break;
      }
      case ScenarioKind::noisy: {
        const auto& o = std::get<NoisyObservation>(obs);
        schedule_ = o.schedule;
        signs_ = o.signs;
        steps_ = o.signs.rows();
        width_ = o.signs.cols();
        n_ = o.n_agents;
        k_ = o.proxies.cols();
        if (k_ > n_) throw std::invalid_argument("MsmSimulator: more proxies per step than agents");
        break;
      }
    }
  }

  SummarySeries operator()(double epsilon, std::uint64_t seed) const {
    if (!(epsilon >= 0.0 && epsilon <= 0.5)) throw std::invalid_argument("MSM candidate epsilon must lie in [0, 0.5]");
    Rng rng(seed);
    SummarySeries out;
    out.w.assign(steps_, 0.0);
    const double rho = params_.rho;
    switch (kind_) {
      case ScenarioKind::full:
        for (std::size_t t = 0; t < steps_; ++t) {
          double w = 0.0;
          for (std::size_t j = 0; j < width_; ++j)
            w += rng.bernoulli(sigmoid(rho * (epsilon - dist_[t * width_ + j]))) ? 1.0 : 0.0;
          out.w[t] = w;
        }
        break;
      case ScenarioKind::partial:
        for (std::size_t t = 0; t < steps_; ++t) {
          const auto x = traj_.row(t);
          double w = 0.0;
          for (std::size_t j = 0; j < width_; ++j) {
            const auto u = rng.uniform_index(n_);
            const auto v = rng.uniform_index(n_);
            w += rng.bernoulli(interaction_prob(x[u], x[v], epsilon, rho)) ? 1.0 : 0.0;
          }
          out.w[t] = w;
        }
        break;
      case ScenarioKind::noisy: {
        Opinions x(n_);
        for (auto& xi : x) xi = rng.uniform();
        std::vector<std::uint32_t> perm(n_);
        std::iota(perm.begin(), perm.end(), 0u);
        std::vector<double> g0(steps_), g1(steps_), labels(k_);
        for (std::size_t t = 0; t < steps_; ++t) {
          double w = 0.0;
          for (std::size_t j = 0; j < width_; ++j) {
            const auto [u, v] = schedule_(t, j);
            w += rng.bernoulli(interaction_prob(x[u], x[v], epsilon, rho)) ? 1.0 : 0.0;
          }
          out.w[t] = w;
          for (std::size_t j = 0; j < width_; ++j) apply_update_inplace(x, schedule_(t, j), signs_(t, j) != 0, params_.mu);
          for (std::size_t i = 0; i < k_; ++i) {
            const std::size_t pick = i + rng.uniform_index(n_ - i);
            std::swap(perm[i], perm[pick]);
            labels[i] = rng.bernoulli(x[perm[i]]) ? 1.0 : 0.0;
          }
          detail::proxy_stats(labels, g0[t], g1[t]);
        }
        out.gamma0 = std::move(g0);
        out.gamma1 = std::move(g1);
        break;
      }
    }
    return out;
  }

 private:
  ScenarioKind kind_;
  ModelParams params_;
  std::size_t steps_ = 0;
  std::size_t width_ = 0;
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<double> dist_;
  Grid<double> traj_;
  Grid<InteractionPair> schedule_;
  Grid<std::uint8_t> signs_;
};

inline SummarySeries simulate_for_msm(const ObservedData& obs, double epsilon_candidate, const ModelParams& params,
                                      std::uint64_t seed) {
  return MsmSimulator(obs, params)(epsilon_candidate, seed);
}

struct MsmConfig {
  std::size_t n_simulations = 200;
  Interval epsilon_range{0.0, 0.5};
  std::uint64_t seed = 0;

  void validate() const {
    if (n_simulations < 1) throw std::invalid_argument("n_simulations must be at least 1");
    if (!(epsilon_range.lo >= 0.0 && epsilon_range.hi <= 0.5 && epsilon_range.lo <= epsilon_range.hi))
      throw std::invalid_argument("epsilon_range must lie within [0, 0.5]");
  }
};

/// Sample-and-select calibration with an arbitrary simulator
/// `(double epsilon, uint64_t seed) -> SummarySeries`. Candidate i (0-based)
/// is the (i+1)-th Halton point and is simulated once with seed
/// derive_seed(config.seed, {msm_candidate, i}). Ties in the argmin go to the
/// lowest index.
template <typename Simulator>
EstimationResult estimate_msm_with(const ObservedData& obs, const MsmConfig& config, Simulator&& simulate) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const SummarySeries target = observed_summary(obs);
  const auto candidates = halton_points(config.n_simulations, config.epsilon_range);

  EstimationResult result;
  result.loss_history.reserve(candidates.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const SummarySeries sim = simulate(candidates[i], derive_seed(config.seed, {stream::msm_candidate, i}));
    const double loss = msm_loss(target, sim);
    result.loss_history.push_back(loss);
    if (loss < result.loss_history[best]) best = i;
  }
  result.epsilon_hat = candidates[best];
  result.epochs_run = candidates.size();
  result.degenerate = !carries_information(obs);
  result.converged = !result.degenerate;
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

inline EstimationResult estimate_msm(const ObservedData& obs, const ModelParams& params, const MsmConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const MsmSimulator sim(obs, params);
  auto result = estimate_msm_with(obs, config, sim);
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace bcm
