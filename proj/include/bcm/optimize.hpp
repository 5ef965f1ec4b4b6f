#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bcm/estimation.hpp"
#include "bcm/likelihood.hpp"
#include "bcm/rng.hpp"
#include "bcm/scenarios.hpp"

namespace bcm {

enum class Algorithm { adam, nadam, rmsprop };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::adam: return "adam";
    case Algorithm::nadam: return "nadam";
    case Algorithm::rmsprop: return "rmsprop";
  }
  return "unknown";
}

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "adam") return Algorithm::adam;
  if (s == "nadam") return Algorithm::nadam;
  if (s == "rmsprop") return Algorithm::rmsprop;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "' (expected adam|nadam|rmsprop)");
}

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::adam;
  double lr_eps = 0.05;
  double lr_x0_multiplier = 1.0;
  std::size_t max_epochs = 200;
  double convergence_tol = 1e-6;
  std::size_t convergence_window = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rms_decay = 0.99;
  double stability = 1e-8;

  void validate() const {
    if (!(lr_eps > 0.0)) throw std::invalid_argument("lr_eps must be positive");
    if (!(lr_x0_multiplier >= 1.0)) throw std::invalid_argument("lr_x0_multiplier must be at least 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be at least 1");
    if (convergence_window < 1) throw std::invalid_argument("convergence_window must be at least 1");
  }
};

/// Tuned per-scenario defaults.
inline OptimizerConfig default_optimizer_config(ScenarioKind kind) {
  OptimizerConfig c;
  switch (kind) {
    case ScenarioKind::full:
      c.algorithm = Algorithm::nadam;
      c.lr_eps = 0.1;
      break;
    case ScenarioKind::partial:
      c.algorithm = Algorithm::adam;
      c.lr_eps = 0.05;
      break;
    case ScenarioKind::noisy:
      c.algorithm = Algorithm::rmsprop;
      c.lr_eps = 0.05;
      c.lr_x0_multiplier = 10.0;
      break;
  }
  return c;
}

/// First-order minimizer with per-parameter learning rates.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, std::vector<double> learning_rates)
      : cfg_(config), lr_(std::move(learning_rates)), m_(lr_.size(), 0.0), v_(lr_.size(), 0.0) {}

  std::size_t dimension() const noexcept { return lr_.size(); }
  std::size_t iterations() const noexcept { return t_; }

  /// One descent step: params move against grad.
  void step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != lr_.size() || grad.size() != lr_.size())
      throw std::invalid_argument("Optimizer::step: dimension mismatch");
    ++t_;
    const double b1 = cfg_.beta1;
    const double b2 = cfg_.beta2;
    const double tt = static_cast<double>(t_);
    switch (cfg_.algorithm) {
      case Algorithm::adam: {
        const double c1 = 1.0 - std::pow(b1, tt);
        const double c2 = 1.0 - std::pow(b2, tt);
        for (std::size_t i = 0; i < params.size(); ++i) {
          m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
          v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
          params[i] -= lr_[i] * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.stability);
        }
        break;
      }
      case Algorithm::nadam: {
        // Nesterov look-ahead on the bias-corrected first moment.
        const double b1t = std::pow(b1, tt);
        const double c2 = 1.0 - std::pow(b2, tt);
        for (std::size_t i = 0; i < params.size(); ++i) {
          m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
          v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
          const double m_bar = b1 * m_[i] / (1.0 - b1t * b1) + (1.0 - b1) * grad[i] / (1.0 - b1t);
          params[i] -= lr_[i] * m_bar / (std::sqrt(v_[i] / c2) + cfg_.stability);
        }
        break;
      }
      case Algorithm::rmsprop: {
        const double a = cfg_.rms_decay;
        for (std::size_t i = 0; i < params.size(); ++i) {
          v_[i] = a * v_[i] + (1.0 - a) * grad[i] * grad[i];
          params[i] -= lr_[i] * grad[i] / (std::sqrt(v_[i]) + cfg_.stability);
        }
        break;
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::vector<double> lr_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

/// Relative change of the objective across the last `window` epochs.
inline bool has_converged(std::span<const double> history, std::size_t window, double tol) {
  if (history.size() <= window) return false;
  const double now = history.back();
  const double then = history[history.size() - 1 - window];
  return std::abs(now - then) <= tol * std::max(std::abs(then), 1e-12);
}

struct MlOptions {
  /// Starting X0 for BCM-N; drawn uniformly in (0.01, 0.99) when absent.
  std::optional<Opinions> x0_init;
  PartialOptions partial{};
};

/// Maximum-likelihood estimate of epsilon (and X0 for BCM-N) by full-batch
/// gradient ascent. Stops at convergence or after `config.max_epochs`.
inline EstimationResult estimate_ml(const ObservedData& obs, const ModelParams& params, const OptimizerConfig& config,
                                    std::uint64_t seed, const MlOptions& options = {}) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const ScenarioKind kind = kind_of(obs);

  ReparamState state;
  state.theta_eps = 0.0;  // epsilon = 0.25
  std::size_t n_x = 0;
  if (kind == ScenarioKind::noisy) {
    n_x = std::get<NoisyObservation>(obs).n_agents;
    std::vector<double> theta(n_x);
    if (options.x0_init) {
      if (options.x0_init->size() != n_x) throw std::invalid_argument("estimate_ml: x0_init has the wrong length");
      for (std::size_t i = 0; i < n_x; ++i) theta[i] = logit((*options.x0_init)[i]);
    } else {
      Rng rng(derive_seed(seed, {stream::ml_init}));
      for (auto& th : theta) th = logit(rng.uniform(0.01, 0.99));
    }
    state.theta_x0 = std::move(theta);
  }

  // Objective evaluators, built once per run.
  std::optional<FullLikelihood> full;
  std::optional<PartialLikelihood> partial;
  std::optional<NoisyLikelihood> noisy;
  switch (kind) {
    case ScenarioKind::full: full.emplace(std::get<FullObservation>(obs), params); break;
    case ScenarioKind::partial: {
      PartialOptions popt = options.partial;
      popt.seed = seed;
      partial.emplace(std::get<PartialObservation>(obs), params, popt);
      break;
    }
    case ScenarioKind::noisy: noisy.emplace(std::get<NoisyObservation>(obs), params); break;
  }

  std::vector<double> lrs(1 + n_x, config.lr_eps * config.lr_x0_multiplier);
  lrs[0] = config.lr_eps;
  Optimizer opt(config, lrs);
  std::vector<double> x(1 + n_x);
  std::vector<double> g(1 + n_x);

  EstimationResult result;
  result.degenerate = !carries_information(obs);
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    LogLikValue val;
    if (full) val = full->evaluate(state);
    else if (partial) val = partial->evaluate(state, epoch);
    else val = noisy->evaluate_symmetric(state).value;

    result.loss_history.push_back(val.value);
    if (!std::isfinite(val.value)) break;
    if (has_converged(result.loss_history, config.convergence_window, config.convergence_tol)) {
      result.converged = true;
      break;
    }

    x[0] = state.theta_eps;
    g[0] = -val.grad_theta_eps;
    for (std::size_t i = 0; i < n_x; ++i) {
      x[1 + i] = (*state.theta_x0)[i];
      g[1 + i] = -(*val.grad_theta_x0)[i];
    }
    opt.step(x, g);
    state.theta_eps = x[0];
    for (std::size_t i = 0; i < n_x; ++i) (*state.theta_x0)[i] = x[1 + i];
  }

  result.epochs_run = result.loss_history.size();
  result.epsilon_hat = state.epsilon();
  if (noisy) {
    result.reflected = noisy->evaluate_symmetric(state).reflected;
    result.x0_hat = decode_x0(*state.theta_x0, result.reflected);
  }
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

inline EstimationResult estimate_ml(const ObservedData& obs, const ModelParams& params, std::uint64_t seed) {
  return estimate_ml(obs, params, default_optimizer_config(kind_of(obs)), seed);
}

}  // namespace bcm
