// Test-only reference implementations, kept independent of the library code
// paths they are used to verify.
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ssm/model.hpp"

namespace ssm::testing {

// Dense multivariate normal log-density via full Cholesky of cov.
double dense_mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov);

// Covariance of y_{1:T} for the AR(1)-plus-noise model, built directly from
// the stationary autocovariance sigma^2 rho^|i-j| / (1 - rho^2).
Matrix lg_obs_covariance(double rho, double sigma, double tau, int T);

// Deterministic grid posterior for the one-unknown-rho model with a uniform
// prior over (lo, hi); the likelihood at each grid point is evaluated with an
// exact filter supplied by the caller.
struct GridPosterior {
  double mean = 0.0;
  double var = 0.0;
  double log_evidence = 0.0;
};
GridPosterior grid_posterior_1d(const std::function<double(double)>& loglik,
                                double lo, double hi, int n_grid);

// Two-sample Kolmogorov-Smirnov p-value (asymptotic).
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

// Composite Simpson rule with n (even) panels.
double simpson_integrate(const std::function<double(double)>& f, double a, double b,
                         int n);

// Straightforward two-pass weighted moments; weights must be normalized.
struct WeightedMoments {
  Vector mean;
  Matrix cov;
};
WeightedMoments two_pass_weighted_moments(const std::vector<Vector>& xs,
                                          std::span<const double> w);

}  // namespace ssm::testing
