#include "ssm/ibis.hpp"

#include <algorithm>
#include <cmath>

#include "ssm/errors.hpp"
#include "ssm/util.hpp"

namespace ssm {
namespace {

constexpr std::uint64_t kTagPrior = 1;
constexpr std::uint64_t kTagResample = 2;
constexpr std::uint64_t kTagMove = 3;

Matrix jittered_cholesky(Matrix& cov) {
  const int d = static_cast<int>(cov.rows());
  if (d == 0) return Matrix(0, 0);
  double jitter = 1e-9 * std::max(cov.trace() / d, 1e-3);
  for (int attempt = 0; attempt < 16; ++attempt) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    cov += jitter * Matrix::Identity(d, d);
    jitter *= 10.0;
  }
  throw NumericalError("fit_proposal: covariance could not be regularized");
}

}  // namespace

Vector ProposalFit::propose(const Vector& current, RngStream& rng) const {
  const int d = static_cast<int>(mean.size());
  Vector z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  if (kind == ProposalKind::kIndependentGaussian) return mean + chol * z;
  return current + std::sqrt(scale) * (chol * z);
}

double ProposalFit::log_density(const Vector& x) const {
  const int d = static_cast<int>(mean.size());
  if (d == 0) return 0.0;
  // Solve L u = (x - mean); density from the triangular factor.
  const Vector u = chol.triangularView<Eigen::Lower>().solve(x - mean);
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += std::log(chol(i, i));
  return -0.5 * (d * std::log(2.0 * M_PI) + u.squaredNorm()) - logdet;
}

double ProposalFit::log_ratio(const Vector& from, const Vector& to) const {
  if (kind == ProposalKind::kRandomWalk) return 0.0;
  return log_density(from) - log_density(to);
}

ProposalFit fit_proposal(const std::vector<Vector>& thetas,
                         std::span<const double> log_weights, ProposalKind kind,
                         double scale) {
  if (thetas.empty()) throw DegenerateWeightsError("fit_proposal: empty cloud");
  const int d = static_cast<int>(thetas[0].size());
  const std::vector<double> w = normalized_weights_from_log(log_weights);

  ProposalFit fit;
  fit.kind = kind;
  fit.mean = Vector::Zero(d);
  for (std::size_t m = 0; m < thetas.size(); ++m) fit.mean += w[m] * thetas[m];
  fit.cov = Matrix::Zero(d, d);
  for (std::size_t m = 0; m < thetas.size(); ++m) {
    const Vector centered = thetas[m] - fit.mean;
    fit.cov += w[m] * (centered * centered.transpose());
  }
  fit.scale = scale > 0.0 ? scale : (d > 0 ? 2.38 * 2.38 / d : 1.0);
  fit.chol = jittered_cholesky(fit.cov);
  return fit;
}

MhResult mh_move(Vector theta, const std::function<double(const Vector&)>& log_target,
                 const ProposalFit& proposal, int n_moves, RngStream rng) {
  MhResult result;
  double current_lt = log_target(theta);
  for (int k = 0; k < n_moves; ++k) {
    RngStream move_rng = rng.split(static_cast<std::uint64_t>(k));
    const Vector cand = proposal.propose(theta, move_rng);
    const double cand_lt = log_target(cand);
    const double log_r = cand_lt - current_lt + proposal.log_ratio(theta, cand);
    if (std::log(1.0 - move_rng.uniform01()) < log_r) {
      theta = cand;
      current_lt = cand_lt;
      ++result.accepted;
    }
  }
  result.theta = std::move(theta);
  return result;
}

IbisState ibis_init(const Model& model, const IbisConfig& config, RngStream root) {
  if (!model.has_exact_loglik())
    throw InvalidParameterError("ibis requires a model with exact likelihood increments");
  if (config.n_theta < 2) throw InvalidParameterError("ibis: n_theta must be >= 2");
  IbisState state;
  state.config = config;
  state.root = root;
  state.cloud.thetas.resize(config.n_theta);
  state.cloud.log_weights.assign(config.n_theta, 0.0);
  state.cloud.attachments.assign(config.n_theta, KalmanState{});
  RngStream prior_rng = root.split(kTagPrior);
  for (int m = 0; m < config.n_theta; ++m) {
    RngStream r = prior_rng.split(static_cast<std::uint64_t>(m));
    state.cloud.thetas[m] = model.prior_sample(r);
  }
  return state;
}

IbisStepResult ibis_step(IbisState& state, const Model& model, const Dataset& data) {
  const int n = state.cloud.size();
  const Observation& y = data.at(state.t);
  const int t_next = state.t + 1;

  const double log_norm_before = logsumexp(state.cloud.log_weights);
  parallel_for(n, state.config.n_threads, [&](int m) {
    KalmanState& ks = state.cloud.attachments[m];
    const double before = ks.loglik;
    kalman_step(ks, y, *model.lgss_form(state.cloud.thetas[m]));
    state.cloud.log_weights[m] += ks.loglik - before;
  });
  state.t = t_next;

  IbisStepResult result;
  result.log_Lt = logsumexp(state.cloud.log_weights) - log_norm_before;
  state.log_evidence += result.log_Lt;
  result.ess = ess_from_log_weights(state.cloud.log_weights);

  if (result.ess < state.config.ess_threshold * n) {
    result.resampled = true;
    // Move in the unconstrained proposal space, with the Jacobian folded into
    // the target so the kernel stays invariant for p(theta | y_{1:t}).
    const ThetaTransform transform(model.theta_transforms());
    std::vector<Vector> etas(n);
    for (int m = 0; m < n; ++m)
      etas[m] = transform.to_unconstrained(state.cloud.thetas[m]);
    const ProposalFit proposal = fit_proposal(
        etas, state.cloud.log_weights, state.config.proposal, state.config.rw_scale);

    const std::vector<double> w = normalized_weights_from_log(state.cloud.log_weights);
    RngStream resample_rng =
        state.root.split(kTagResample).split(static_cast<std::uint64_t>(t_next));
    const std::vector<int> picks =
        resample_indices(w, n, ResampleScheme::kMultinomial, resample_rng);
    std::vector<Vector> new_etas(n);
    for (int m = 0; m < n; ++m) new_etas[m] = etas[picks[m]];

    const Dataset prefix(data.begin(), data.begin() + t_next);
    auto log_target = [&](const Vector& eta) {
      const Vector th = transform.to_constrained(eta);
      const double lp = model.prior_logpdf(th);
      if (lp == kNegInf) return kNegInf;
      return lp + transform.log_jacobian(eta) + model.exact_loglik(th, prefix);
    };

    RngStream move_rng =
        state.root.split(kTagMove).split(static_cast<std::uint64_t>(t_next));
    std::vector<int> accepted(n, 0);
    parallel_for(n, state.config.n_threads, [&](int m) {
      MhResult mh = mh_move(new_etas[m], log_target, proposal, state.config.n_moves,
                            move_rng.split(static_cast<std::uint64_t>(m)));
      accepted[m] = mh.accepted;
      state.cloud.thetas[m] = transform.to_constrained(mh.theta);
      // Rebuild the exact-filter attachment for the (possibly) moved particle.
      KalmanState ks;
      const LgssForm form = *model.lgss_form(state.cloud.thetas[m]);
      for (int s = 0; s < t_next; ++s) kalman_step(ks, data[s], form);
      state.cloud.attachments[m] = std::move(ks);
    });
    std::fill(state.cloud.log_weights.begin(), state.cloud.log_weights.end(), 0.0);
    long total = 0;
    for (int a : accepted) total += a;
    result.acceptance_rate =
        static_cast<double>(total) / (static_cast<double>(n) * state.config.n_moves);
  }
  return result;
}

}  // namespace ssm
