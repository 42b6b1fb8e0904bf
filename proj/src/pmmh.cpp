#include "ssm/pmmh.hpp"

#include <algorithm>
#include <cmath>

#include "ssm/errors.hpp"
#include "ssm/smc2.hpp"
#include "ssm/util.hpp"

namespace ssm {
namespace {

constexpr std::uint64_t kTagInit = 1;
constexpr std::uint64_t kTagIter = 2;

// Running mean/covariance of the chain for random-walk adaptation.
struct MomentTracker {
  long n = 0;
  Vector mean;
  Matrix m2;

  void init(int d) {
    mean = Vector::Zero(d);
    m2 = Matrix::Zero(d, d);
  }
  void add(const Vector& x) {
    ++n;
    const Vector delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean).transpose();
  }
  Matrix cov() const {
    if (n < 2) return Matrix::Identity(mean.size(), mean.size());
    Matrix c = m2 / static_cast<double>(n - 1);
    return 0.5 * (c + c.transpose());
  }
};

ProposalFit make_rw_proposal(const Vector& mean, Matrix cov, double scale) {
  const int d = static_cast<int>(mean.size());
  ProposalFit fit;
  fit.kind = ProposalKind::kRandomWalk;
  fit.mean = mean;
  fit.scale = scale;
  if (cov.isZero(0.0)) {
    // Degenerate proposal: stays put, estimates still get refreshed.
    fit.cov = cov;
    fit.chol = Matrix::Zero(d, d);
    return fit;
  }
  cov += 1e-12 * Matrix::Identity(d, d);
  Eigen::LLT<Matrix> llt(cov);
  while (llt.info() != Eigen::Success) {
    cov += 1e-6 * Matrix::Identity(d, d);
    llt.compute(cov);
  }
  fit.cov = cov;
  fit.chol = llt.matrixL();
  return fit;
}

}  // namespace

PmmhChain pmmh_run(const Model& model, const Dataset& data, const PmmhConfig& config,
                   RngStream root) {
  if (config.n_iter < 1) throw InvalidParameterError("pmmh: n_iter must be >= 1");
  const int d = model.theta_dim();

  // Initial state: prior draw with a live filter.
  RngStream init_rng = root.split(kTagInit);
  Vector theta;
  PFState filter;
  bool ok = false;
  for (int attempt = 0; attempt < config.init_retry_budget; ++attempt) {
    RngStream r = init_rng.split(static_cast<std::uint64_t>(attempt));
    theta = model.prior_sample(r);
    filter = pf_full_loglik(model, theta, data, config.n_x, r.split(1000));
    if (!filter.degenerate()) {
      ok = true;
      break;
    }
  }
  if (!ok)
    throw FilterDegenerateError(
        "pmmh: no non-degenerate initialization within the retry budget",
        {theta.data(), theta.data() + theta.size()}, static_cast<int>(data.size()));

  // The chain walks the unconstrained scale; samples are reported constrained.
  const ThetaTransform transform(model.theta_transforms());
  Vector eta = transform.to_unconstrained(theta);

  MomentTracker tracker;
  tracker.init(d);
  tracker.add(eta);

  const double rw_scale = d > 0 ? 2.38 * 2.38 / d : 1.0;
  ProposalFit proposal = make_rw_proposal(
      eta, config.init_scale * config.init_scale * Matrix::Identity(d, d), 1.0);
  if (config.proposal == ProposalKind::kIndependentGaussian)
    proposal.kind = ProposalKind::kIndependentGaussian;

  const long adapt_until =
      config.adapt ? static_cast<long>(config.adapt_burnin_frac * config.n_iter) : 0;

  PmmhChain chain;
  chain.n_iter = config.n_iter;
  chain.samples.reserve(config.n_iter / config.thin + 1);
  RngStream iter_rng = root.split(kTagIter);
  double log_score = model.prior_logpdf(theta) + transform.log_jacobian(eta);

  for (long it = 0; it < config.n_iter; ++it) {
    RngStream r = iter_rng.split(static_cast<std::uint64_t>(it));
    RngStream proposal_rng = r.split(0);
    RngStream filter_rng = r.split(1);

    const Vector cand_eta = proposal.propose(eta, proposal_rng);
    const Vector cand = transform.to_constrained(cand_eta);
    const double cand_log_prior = model.prior_logpdf(cand);
    const double log_u = std::log(1.0 - proposal_rng.uniform01());
    bool accepted = false;
    if (cand_log_prior != kNegInf) {
      PFState cand_filter = pf_full_loglik(model, cand, data, config.n_x, filter_rng);
      const double cand_score = cand_log_prior + transform.log_jacobian(cand_eta);
      const double log_r = cand_score + cand_filter.log_zhat -
                           (log_score + filter.log_zhat) +
                           proposal.log_ratio(eta, cand_eta);
      accepted = log_u < log_r;
      if (config.record_proposals) {
        chain.records.push_back({theta, cand, log_score + filter.log_zhat,
                                 cand_score + cand_filter.log_zhat,
                                 proposal.log_ratio(eta, cand_eta), log_u, accepted});
      }
      if (accepted) {
        theta = cand;
        eta = cand_eta;
        log_score = cand_score;
        filter = std::move(cand_filter);
        ++chain.accepted;
      }
    } else if (config.record_proposals) {
      chain.records.push_back(
          {theta, cand, log_score + filter.log_zhat, kNegInf, 0.0, log_u, false});
    }

    if (it % config.thin == 0) {
      chain.samples.push_back(theta);
      chain.log_zhats.push_back(filter.log_zhat);
    }

    if (config.adapt && it < adapt_until && d > 0) {
      tracker.add(eta);
      if (tracker.n >= 2 * d + 10) {
        proposal = make_rw_proposal(eta, tracker.cov(), rw_scale);
        if (config.proposal == ProposalKind::kIndependentGaussian) {
          proposal.kind = ProposalKind::kIndependentGaussian;
          proposal.mean = tracker.mean;
        }
      }
    }
  }
  return chain;
}

}  // namespace ssm
