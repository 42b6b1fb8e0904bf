#pragma once

#include <vector>

#include "ssm/model.hpp"

namespace ssm {

struct KalmanState {
  Vector mean;
  Matrix cov;
  double loglik = 0.0;
  int t = 0;  // observations absorbed so far
};

// One predict/update sweep. At t=0 the predictive is (m0, P0) directly; the
// covariance update uses the Joseph form and is re-symmetrized. A missing
// observation advances the prediction without touching the likelihood.
void kalman_step(KalmanState& state, const Observation& y, const LgssForm& form);

double kalman_loglik(const LgssForm& form, const Dataset& data);

struct KalmanPath {
  std::vector<Vector> filt_mean, pred_mean;
  std::vector<Matrix> filt_cov, pred_cov;
  double loglik = 0.0;
};

KalmanPath kalman_filter_path(const LgssForm& form, const Dataset& data);

struct SmoothedMoments {
  std::vector<Vector> mean;
  std::vector<Matrix> cov;
};

// Rauch-Tung-Striebel backward pass over a completed forward path.
SmoothedMoments rts_smoother(const KalmanPath& path, const LgssForm& form);

}  // namespace ssm
