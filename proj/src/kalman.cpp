#include "ssm/kalman.hpp"

#include <cmath>

#include "ssm/errors.hpp"

namespace ssm {
namespace {

void predict(const KalmanState& state, const LgssForm& form, Vector& mean, Matrix& cov) {
  if (state.t == 0) {
    mean = form.m0;
    cov = form.P0;
  } else {
    mean = form.F * state.mean;
    cov = form.F * state.cov * form.F.transpose() + form.Q;
  }
}

}  // namespace

void kalman_step(KalmanState& state, const Observation& y, const LgssForm& form) {
  Vector pred_mean;
  Matrix pred_cov;
  predict(state, form, pred_mean, pred_cov);

  if (y.missing) {
    state.mean = pred_mean;
    state.cov = pred_cov;
    ++state.t;
    return;
  }

  const Matrix S = form.H * pred_cov * form.H.transpose() + form.R;
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericalError("kalman_step: innovation covariance not positive definite at t=" +
                         std::to_string(state.t + 1));
  const Vector innov = y.y - form.H * pred_mean;
  const Matrix K = pred_cov * form.H.transpose() * llt.solve(Matrix::Identity(S.rows(), S.cols()));

  const Matrix I = Matrix::Identity(pred_cov.rows(), pred_cov.cols());
  const Matrix A = I - K * form.H;
  Matrix cov = A * pred_cov * A.transpose() + K * form.R * K.transpose();
  state.cov = 0.5 * (cov + cov.transpose());
  state.mean = pred_mean + K * innov;

  const double quad = innov.dot(llt.solve(innov));
  double logdet = 0.0;
  for (int i = 0; i < S.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  state.loglik += -0.5 * (S.rows() * std::log(2.0 * M_PI) + logdet + quad);
  ++state.t;
}

double kalman_loglik(const LgssForm& form, const Dataset& data) {
  KalmanState state;
  for (const auto& y : data) kalman_step(state, y, form);
  return state.loglik;
}

KalmanPath kalman_filter_path(const LgssForm& form, const Dataset& data) {
  KalmanPath path;
  KalmanState state;
  for (const auto& y : data) {
    Vector pm;
    Matrix pc;
    predict(state, form, pm, pc);
    kalman_step(state, y, form);
    path.pred_mean.push_back(pm);
    path.pred_cov.push_back(pc);
    path.filt_mean.push_back(state.mean);
    path.filt_cov.push_back(state.cov);
  }
  path.loglik = state.loglik;
  return path;
}

SmoothedMoments rts_smoother(const KalmanPath& path, const LgssForm& form) {
  const int T = static_cast<int>(path.filt_mean.size());
  SmoothedMoments out;
  out.mean.resize(T);
  out.cov.resize(T);
  if (T == 0) return out;
  out.mean[T - 1] = path.filt_mean[T - 1];
  out.cov[T - 1] = path.filt_cov[T - 1];
  for (int t = T - 2; t >= 0; --t) {
    Eigen::LLT<Matrix> llt(path.pred_cov[t + 1]);
    if (llt.info() != Eigen::Success)
      throw NumericalError("rts_smoother: predicted covariance not positive definite");
    // J = P_f F' (P_pred)^-1, computed via the factorization.
    const Matrix J =
        llt.solve(form.F * path.filt_cov[t].transpose()).transpose();
    out.mean[t] = path.filt_mean[t] + J * (out.mean[t + 1] - path.pred_mean[t + 1]);
    Matrix cov = path.filt_cov[t] +
                 J * (out.cov[t + 1] - path.pred_cov[t + 1]) * J.transpose();
    out.cov[t] = 0.5 * (cov + cov.transpose());
  }
  return out;
}

}  // namespace ssm
