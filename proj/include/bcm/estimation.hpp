#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bcm/model.hpp"

namespace bcm {

/// Output of either estimator.
///
/// For maximum likelihood, `loss_history` holds the objective (log-likelihood)
/// at each epoch. For simulated moments it holds the moment loss of every
/// candidate in Halton order, and `epochs_run` counts simulations.
struct EstimationResult {
  double epsilon_hat = 0.25;
  std::optional<Opinions> x0_hat;
  std::vector<double> loss_history;
  std::size_t epochs_run = 0;
  bool converged = false;
  bool degenerate = false;  ///< the data carried no information about epsilon
  bool reflected = false;   ///< BCM-N: x0_hat uses the 1 - X0 orientation
  double wall_time_s = 0.0;
};

}  // namespace bcm
