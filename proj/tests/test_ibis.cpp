#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "ssm/errors.hpp"
#include "ssm/ibis.hpp"
#include "ssm/models/linear_gaussian.hpp"
#include "ssm/util.hpp"

using namespace ssm;

namespace {

LinearGaussianModel rho_only_lg() {
  return LinearGaussianModel(Prior1D::uniform(-1.0, 1.0), Prior1D::fixed(1.0),
                             Prior1D::fixed(1.0));
}

Dataset simulate_rho_lg(double rho, int T, std::uint64_t seed) {
  LinearGaussianModel gen(Prior1D::fixed(rho), Prior1D::fixed(1.0), Prior1D::fixed(1.0));
  return simulate_model(gen, Vector(0), T, RngStream(seed)).data;
}

testing::GridPosterior rho_grid(const LinearGaussianModel& model, const Dataset& data,
                                int n_grid = 2001) {
  return testing::grid_posterior_1d(
      [&](double rho) {
        return model.exact_loglik(Vector::Constant(1, rho), data);
      },
      -1.0, 1.0, n_grid);
}

double cloud_mean(const ThetaCloud<KalmanState>& cloud, int dim = 0) {
  const std::vector<double> w = normalized_weights_from_log(cloud.log_weights);
  double m = 0.0;
  for (int i = 0; i < cloud.size(); ++i) m += w[i] * cloud.thetas[i][dim];
  return m;
}

double cloud_var(const ThetaCloud<KalmanState>& cloud, int dim = 0) {
  const std::vector<double> w = normalized_weights_from_log(cloud.log_weights);
  const double m = cloud_mean(cloud, dim);
  double v = 0.0;
  for (int i = 0; i < cloud.size(); ++i)
    v += w[i] * (cloud.thetas[i][dim] - m) * (cloud.thetas[i][dim] - m);
  return v;
}

}  // namespace

TEST_CASE("fit_proposal: all weight on one particle leaves jitter only") {
  std::vector<Vector> thetas{Vector::Constant(2, 1.0), Vector::Constant(2, 5.0)};
  thetas[1] << 4.0, -2.0;
  std::vector<double> logw{0.0, -4000.0};
  const ProposalFit fit =
      fit_proposal(thetas, logw, ProposalKind::kIndependentGaussian);
  CHECK(fit.mean[0] == doctest::Approx(1.0));
  CHECK(fit.mean[1] == doctest::Approx(1.0));
  CHECK(fit.cov.norm() < 1e-6);  // only the regularization remains
  CHECK(fit.cov(0, 0) > 0.0);
}

TEST_CASE("fit_proposal: equal weights give the ordinary weighted moments") {
  RngStream rng(3);
  std::vector<Vector> thetas;
  for (int i = 0; i < 50; ++i) {
    Vector v(2);
    v << rng.normal(), 2.0 * rng.normal() + 0.3;
    thetas.push_back(v);
  }
  std::vector<double> logw(50, -1.7);
  const ProposalFit fit = fit_proposal(thetas, logw, ProposalKind::kRandomWalk);
  const std::vector<double> w(50, 1.0 / 50.0);
  const testing::WeightedMoments oracle = testing::two_pass_weighted_moments(thetas, w);
  CHECK((fit.mean - oracle.mean).norm() < 1e-12);
  CHECK((fit.cov - oracle.cov).norm() < 1e-9);  // jitter-sized difference
  CHECK(fit.scale == doctest::Approx(2.38 * 2.38 / 2.0));
}

TEST_CASE("fit_proposal matches the two-pass oracle on a weighted cloud") {
  RngStream rng(4);
  std::vector<Vector> thetas;
  std::vector<double> logw;
  for (int i = 0; i < 200; ++i) {
    Vector v(3);
    v << rng.normal(), rng.exponential(1.0), rng.uniform01();
    thetas.push_back(v);
    logw.push_back(rng.normal());
  }
  const ProposalFit fit = fit_proposal(thetas, logw, ProposalKind::kIndependentGaussian);
  const std::vector<double> w = normalized_weights_from_log(logw);
  const testing::WeightedMoments oracle = testing::two_pass_weighted_moments(thetas, w);
  CHECK((fit.mean - oracle.mean).norm() < 1e-12);
  CHECK((fit.cov - oracle.cov).norm() < 1e-8);
}

TEST_CASE("degenerate cloud raises") {
  std::vector<Vector> thetas{Vector::Zero(1)};
  std::vector<double> logw{kNegInf};
  CHECK_THROWS_AS(fit_proposal(thetas, logw, ProposalKind::kRandomWalk),
                  DegenerateWeightsError);
}

TEST_CASE("mh_move with the target as independent proposal accepts everything") {
  ProposalFit fit;
  fit.kind = ProposalKind::kIndependentGaussian;
  fit.mean = Vector::Zero(1);
  fit.cov = Matrix::Identity(1, 1);
  fit.chol = Matrix::Identity(1, 1);
  const auto target = [&](const Vector& x) { return fit.log_density(x); };
  const MhResult res = mh_move(Vector::Constant(1, 0.3), target, fit, 200, RngStream(5));
  CHECK(res.accepted == 200);
}

TEST_CASE("symmetric random walk on a standard normal target") {
  ProposalFit fit;
  fit.kind = ProposalKind::kRandomWalk;
  fit.mean = Vector::Zero(1);
  fit.cov = Matrix::Identity(1, 1);
  fit.chol = Matrix::Identity(1, 1);
  fit.scale = 2.38 * 2.38;
  const auto target = [](const Vector& x) { return -0.5 * x.squaredNorm(); };

  Vector x = Vector::Zero(1);
  RngStream rng(6);
  const int n = 100000;
  std::vector<double> chain(n);
  for (int i = 0; i < n; ++i) {
    x = mh_move(x, target, fit, 1, rng.split(i)).theta;
    chain[i] = x[0];
  }
  // Autocorrelation-inflated standard error via batch means.
  std::vector<double> batch;
  for (int b = 0; b < 50; ++b)
    batch.push_back(mean_of(std::span<const double>(chain.data() + b * 2000, 2000)));
  const double se = std::sqrt(variance_of(batch) / 50.0);
  CHECK(std::fabs(mean_of(chain)) < 3.0 * se);
  CHECK(variance_of(chain) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("zero-variance random walk accepts but never moves") {
  ProposalFit fit;
  fit.kind = ProposalKind::kRandomWalk;
  fit.mean = Vector::Zero(1);
  fit.cov = Matrix::Zero(1, 1);
  fit.chol = Matrix::Zero(1, 1);
  const auto target = [](const Vector& x) { return -0.5 * x.squaredNorm(); };
  const MhResult res = mh_move(Vector::Constant(1, 0.7), target, fit, 50, RngStream(7));
  CHECK(res.accepted == 50);
  CHECK(res.theta[0] == 0.7);
}

TEST_CASE("one observation, three-atom cloud: weights follow Bayes exactly") {
  const LinearGaussianModel model = rho_only_lg();
  const Dataset data = simulate_rho_lg(0.5, 1, 71);

  IbisConfig config;
  config.n_theta = 3;
  config.ess_threshold = 0.0;  // never rejuvenate here
  IbisState state = ibis_init(model, config, RngStream(8));
  state.cloud.thetas[0] = Vector::Constant(1, -0.5);
  state.cloud.thetas[1] = Vector::Constant(1, 0.0);
  state.cloud.thetas[2] = Vector::Constant(1, 0.5);

  ibis_step(state, model, data);
  const std::vector<double> w = normalized_weights_from_log(state.cloud.log_weights);
  double norm = 0.0;
  std::vector<double> lik(3);
  for (int i = 0; i < 3; ++i) {
    lik[i] = std::exp(model.exact_loglik(state.cloud.thetas[i], data));
    norm += lik[i];
  }
  for (int i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(lik[i] / norm).epsilon(1e-12));
}

TEST_CASE("posterior moments and evidence match grid quadrature") {
  const LinearGaussianModel model = rho_only_lg();
  const Dataset data = simulate_rho_lg(0.6, 100, 72);
  const testing::GridPosterior grid = rho_grid(model, data);
  const Dataset head30(data.begin(), data.begin() + 30);
  const testing::GridPosterior grid30 = rho_grid(model, head30);

  const int runs = 20;
  std::vector<double> means(runs), vars(runs), evidences(runs), evidences30(runs);
  for (int r = 0; r < runs; ++r) {
    IbisConfig config;
    config.n_theta = 500;
    IbisState state = ibis_init(model, config, RngStream(200, r));
    for (int t = 0; t < 100; ++t) {
      ibis_step(state, model, data);
      if (state.t == 30) evidences30[r] = state.log_evidence;
    }
    means[r] = cloud_mean(state.cloud);
    vars[r] = cloud_var(state.cloud);
    evidences[r] = state.log_evidence;
  }
  const double se_mean = std::sqrt(variance_of(means) / runs);
  const double se_var = std::sqrt(variance_of(vars) / runs);
  const double se_ev = std::sqrt(variance_of(evidences) / runs);
  const double se_ev30 = std::sqrt(variance_of(evidences30) / runs);
  CHECK(std::fabs(mean_of(means) - grid.mean) < 3.0 * se_mean);
  CHECK(std::fabs(mean_of(vars) - grid.var) < 3.0 * se_var);
  CHECK(std::fabs(mean_of(evidences) - grid.log_evidence) < 3.0 * se_ev);
  CHECK(std::fabs(mean_of(evidences30) - grid30.log_evidence) < 3.0 * se_ev30);
}

TEST_CASE("resample-move resets weights and restores full ESS") {
  const LinearGaussianModel model = rho_only_lg();
  const Dataset data = simulate_rho_lg(0.8, 40, 73);
  IbisConfig config;
  config.n_theta = 200;
  config.ess_threshold = 0.7;
  IbisState state = ibis_init(model, config, RngStream(9));
  bool saw_rejuvenation = false;
  for (int t = 0; t < 40; ++t) {
    const IbisStepResult r = ibis_step(state, model, data);
    if (r.resampled) {
      saw_rejuvenation = true;
      for (double lw : state.cloud.log_weights) CHECK(lw == 0.0);
      CHECK(ess_from_log_weights(state.cloud.log_weights) ==
            doctest::Approx(static_cast<double>(config.n_theta)));
      CHECK(r.acceptance_rate > 0.0);
      CHECK(r.acceptance_rate <= 1.0);
    }
  }
  CHECK(saw_rejuvenation);
}

TEST_CASE("L_t is insensitive to a rejuvenation at t-1 (paired runs)") {
  const LinearGaussianModel model = rho_only_lg();
  const Dataset data = simulate_rho_lg(0.4, 10, 74);
  const int reps = 50;
  std::vector<double> diffs(reps);
  for (int r = 0; r < reps; ++r) {
    IbisConfig config;
    config.n_theta = 300;
    config.ess_threshold = 0.0;  // suppressed
    IbisState forced = ibis_init(model, config, RngStream(300, r));
    IbisState suppressed = ibis_init(model, config, RngStream(300, r));
    for (int t = 0; t < 8; ++t) {
      ibis_step(forced, model, data);
      ibis_step(suppressed, model, data);
    }
    // Trigger a rejuvenation in one branch only at t=9.
    forced.config.ess_threshold = 2.0;
    ibis_step(forced, model, data);
    forced.config.ess_threshold = 0.0;
    ibis_step(suppressed, model, data);

    diffs[r] = std::exp(ibis_step(forced, model, data).log_Lt) -
               std::exp(ibis_step(suppressed, model, data).log_Lt);
  }
  const double se = std::sqrt(variance_of(diffs) / reps);
  CHECK(std::fabs(mean_of(diffs)) < 3.0 * se);
}

TEST_CASE("ibis rejects models without exact increments") {
  class NoExact : public LinearGaussianModel {
   public:
    std::optional<LgssForm> lgss_form(const Vector&) const override { return {}; }
  };
  const NoExact model;
  CHECK_THROWS_AS(ibis_init(model, IbisConfig{}, RngStream(1)),
                  InvalidParameterError);
}
