#pragma once

#include <vector>

#include "ssm/model.hpp"
#include "ssm/rng.hpp"

namespace ssm {

// Bootstrap particle filter state for a fixed theta. Weights are kept
// normalized; log_zhat telescopes the per-step increments, so it always
// equals the running unbiased log-likelihood estimate.
//
// When every particle falls off the observation support the filter marks
// itself degenerate (log_zhat = -inf) instead of aborting; callers treat the
// estimate as zero likelihood.
struct PFState {
  Vector theta;
  int nx = 0;
  int state_dim = 0;
  std::vector<double> particles;     // nx * state_dim, particle-major
  std::vector<double> norm_weights;  // sums to 1
  double log_zhat = 0.0;
  double last_log_increment = 0.0;
  int t = 0;  // observations absorbed

  bool store_trajectories = false;
  std::vector<std::vector<double>> history;  // per time: particle snapshot
  std::vector<std::vector<int>> ancestors;   // per time >= 2: parent indices

  bool degenerate() const;
  std::span<const double> particle(int n) const;
  // Full genealogy of particle n, flattened t x state_dim.
  // Throws NotStoredError when trajectories were not stored.
  std::vector<double> trajectory(int n) const;
};

// Initializes on the first observation: nx draws from the initial law,
// weights g(y1 | x1^n), increment log((1/nx) sum w) via max-shift.
PFState pf_init(const Model& model, Vector theta, int nx, const Observation& y1,
                RngStream rng, bool store_trajectories = false);

// One bootstrap step: multinomial ancestors from the current weights
// (systematic optional), propagate, reweight by g(y_t | x_t).
void pf_step(PFState& state, const Model& model, const Observation& yt, RngStream rng,
             ResampleScheme scheme = ResampleScheme::kMultinomial);

// pf_init followed by pf_steps over data[0..], with per-time streams split
// from `rng`; used for PMMH proposals and filter exchanges.
PFState pf_full_loglik(const Model& model, Vector theta, const Dataset& data, int nx,
                       RngStream rng, bool store_trajectories = false,
                       ResampleScheme scheme = ResampleScheme::kMultinomial);

// Effective sample size (sum w)^2 / sum w^2 of an unnormalized weight vector.
double ess(std::span<const double> weights);
// Same from log-weights, max-shift stabilized.
double ess_log(std::span<const double> log_weights);

}  // namespace ssm
