#pragma once

#include <functional>
#include <vector>

#include "ssm/ibis.hpp"
#include "ssm/model.hpp"
#include "ssm/pf.hpp"
#include "ssm/rng.hpp"

namespace ssm {

struct Smc2Config {
  int n_theta = 1000;
  int n_x = 100;
  double ess_threshold = 0.5;        // rejuvenate when ESS < threshold * n_theta
  double acceptance_threshold = 0.2; // grow n_x when PMCMC acceptance drops below
  double nx_growth_factor = 2.0;
  int nx_cap = 1 << 16;
  ProposalKind proposal = ProposalKind::kIndependentGaussian;
  double rw_scale = 0.0;
  int moves_per_rejuvenation = 1;
  bool store_trajectories = false;
  bool auto_nx = true;
  ResampleScheme inner_resampling = ResampleScheme::kMultinomial;
  int n_threads = 1;
};

struct Smc2Diag {
  int t = 0;
  double ess = 0.0;      // before any rejuvenation at this time
  bool resampled = false;
  double acceptance_rate = 0.0;  // of the rejuvenation, when one ran
  int n_x = 0;           // after any exchange at this time
  double log_Lhat = 0.0; // log evidence increment
  double cum_log_evidence = 0.0;
  bool nx_changed = false;
};

// Outer sampler over theta where every particle carries a particle filter.
// Between rejuvenations each log-weight is the telescoped sum of its filter's
// increments; rejuvenations reset weights to zero via a PMCMC kernel.
struct Smc2State {
  ThetaCloud<PFState> cloud;
  int n_x = 0;
  int t = 0;
  double log_evidence = 0.0;
  std::vector<Smc2Diag> diagnostics;
  Smc2Config config;
  RngStream root;
};

Smc2State smc2_init(const Model& model, const Smc2Config& config, const Dataset& data,
                    RngStream root);

// Absorbs data[state.t]: advances every filter, updates weights, records the
// evidence increment, and rejuvenates on the ESS trigger.
void smc2_step(Smc2State& state, const Model& model, const Dataset& data);

// Resample-move with the PMCMC kernel: proposal fitted on the weighted cloud,
// multinomial resampling of (theta, filter) pairs, one or more PMMH moves per
// particle, weights reset; finishes with the automatic n_x check.
void rejuvenate(Smc2State& state, const Model& model, const Dataset& data);

// One particle's PMMH move: propose theta (through the model's unconstrained
// proposal transform), run a fresh full-data filter, accept on the
// likelihood-estimate ratio. Returns the number of accepted moves;
// theta/filter are replaced in place on acceptance. The proposal is fitted
// on transformed parameters.
int pmmh_move(Vector& theta, PFState& filter, const Model& model,
              const Dataset& data_prefix, const ProposalFit& proposal,
              const ThetaTransform& transform, int nx, int n_moves, RngStream rng,
              bool store_trajectories);

// Importance-sampling swap of every particle's filter for a fresh one of size
// new_nx over the full data prefix; weight update log w += log Z_new - log Z_old.
void exchange_step(Smc2State& state, const Model& model, int new_nx,
                   const Dataset& data);

// Doubles (by config factor) n_x through an exchange when the observed
// acceptance rate falls below the configured threshold.
void auto_nx_check(Smc2State& state, const Model& model, double acceptance_rate,
                   const Dataset& data);

// Weighted joint sample over (theta, x): one inner particle per theta-particle
// drawn by its filter weights. Trajectories are included when stored.
struct WeightedJointSample {
  std::vector<double> log_weights;
  std::vector<Vector> thetas;
  std::vector<int> selected;              // n*(m)
  std::vector<std::vector<double>> states;  // x_t, or x_{1:t} flattened when stored
  int state_dim = 0;
  int t = 0;
  bool full_trajectories = false;
};

WeightedJointSample select_trajectories(const Smc2State& state, RngStream rng);

// Doubly weighted estimator reusing all inner particles:
// (sum_m w_m sum_n W_mn h(theta_m, x_t^{n,m})) / sum_m w_m.
double rao_blackwell_estimate(
    const Smc2State& state,
    const std::function<double(const Vector&, std::span<const double>)>& h);

// log of the latest evidence increment recorded by smc2_init/smc2_step.
double log_evidence_increment(const Smc2State& state);

}  // namespace ssm
