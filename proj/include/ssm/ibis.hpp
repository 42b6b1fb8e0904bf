#pragma once

#include <functional>
#include <vector>

#include "ssm/kalman.hpp"
#include "ssm/model.hpp"
#include "ssm/rng.hpp"

namespace ssm {

// Weighted population of theta-particles, each carrying a per-particle
// payload (a Kalman state for exact increments, a particle filter for SMC2).
template <class Attachment>
struct ThetaCloud {
  std::vector<Vector> thetas;
  std::vector<double> log_weights;
  std::vector<Attachment> attachments;

  int size() const { return static_cast<int>(thetas.size()); }
};

enum class ProposalKind { kIndependentGaussian, kRandomWalk };

// Gaussian proposal fitted on the weighted cloud: either an independent
// N(mean, cov) draw or a random walk N(current, scale * cov).
struct ProposalFit {
  Vector mean;
  Matrix cov;
  ProposalKind kind = ProposalKind::kIndependentGaussian;
  double scale = 1.0;
  Matrix chol;  // lower factor of cov

  Vector propose(const Vector& current, RngStream& rng) const;
  // log N(x; mean, cov); only meaningful for the independent kind.
  double log_density(const Vector& x) const;
  // log T(to, from) - log T(from, to): zero for the random walk.
  double log_ratio(const Vector& from, const Vector& to) const;
};

// Weighted mean/covariance of the cloud, jittered to positive definiteness.
// scale <= 0 picks the 2.38^2/d random-walk default.
ProposalFit fit_proposal(const std::vector<Vector>& thetas,
                         std::span<const double> log_weights, ProposalKind kind,
                         double scale = 0.0);

struct MhResult {
  Vector theta;
  int accepted = 0;
};

// n_moves Metropolis-Hastings iterations against log_target.
MhResult mh_move(Vector theta, const std::function<double(const Vector&)>& log_target,
                 const ProposalFit& proposal, int n_moves, RngStream rng);

// Iterated batch importance sampling over theta for Kalman-tractable models:
// exact likelihood increments via a per-particle Kalman state, ESS-triggered
// resample-move rejuvenation.
struct IbisConfig {
  int n_theta = 1000;
  double ess_threshold = 0.5;  // trigger when ESS < threshold * n_theta
  ProposalKind proposal = ProposalKind::kIndependentGaussian;
  double rw_scale = 0.0;
  int n_moves = 1;
  int n_threads = 1;
};

struct IbisState {
  ThetaCloud<KalmanState> cloud;
  int t = 0;
  double log_evidence = 0.0;
  IbisConfig config;
  RngStream root;
};

struct IbisStepResult {
  double log_Lt = 0.0;
  double ess = 0.0;
  bool resampled = false;
  double acceptance_rate = 0.0;
};

IbisState ibis_init(const Model& model, const IbisConfig& config, RngStream root);

// Absorbs data[state.t]; the full prefix is needed for rejuvenation targets.
IbisStepResult ibis_step(IbisState& state, const Model& model, const Dataset& data);

}  // namespace ssm
