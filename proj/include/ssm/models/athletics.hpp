#pragma once

#include "ssm/model.hpp"

namespace ssm {

// Generalized extreme value distribution for minima,
//   G(y | mu, xi, sigma) = 1 - exp(-{1 - xi (y - mu) / sigma}_+^(-1/xi)).
// With xi < 0 the support is y > mu + sigma/xi. Requires sigma > 0, xi != 0.
double gev_cdf(double y, double mu, double xi, double sigma);
double gev_logpdf(double y, double mu, double xi, double sigma);
// log(1 - G); exact for deep tails, 0 below the lower support bound.
double gev_log_survival(double y, double mu, double xi, double sigma);
// Quantile of G, p in (0, 1).
double gev_inv_cdf(double p, double mu, double xi, double sigma);

// Annual best and second-best times. Observations are pairs y = (y1, y2),
// y1 < y2, both GEV-for-minima with a location that follows a smooth
// second-order random walk:
//   x_t = (loc_t, trend_t),  x_{t+1} ~ N(F x_t, Q),
//   F = [[1,1],[0,1]],  Q = nu^2 [[1/3,1/2],[1/2,1]].
// theta = (nu, xi, sigma); a year may be marked missing, contributing
// likelihood 1.
class AthleticsModel : public Model {
 public:
  AthleticsModel();

  int theta_dim() const override { return params_.free_dim(); }
  int state_dim() const override { return 2; }
  int obs_dim() const override { return 2; }
  const std::vector<std::string>& theta_names() const override {
    return params_.free_names();
  }

  Vector prior_sample(RngStream& rng) const override;
  double prior_logpdf(const Vector& theta) const override;
  void init_sample(const Vector& theta, std::span<double> x,
                   RngStream& rng) const override;
  void transition_sample(const Vector& theta, std::span<const double> x, int t,
                         std::span<double> x_next, RngStream& rng) const override;
  double obs_logpdf(const Vector& theta, std::span<const double> x,
                    const Observation& y, int t) const override;
  void obs_sample(const Vector& theta, std::span<const double> x, int t,
                  std::span<double> y, RngStream& rng) const override;

  std::vector<ParamTransform> theta_transforms() const override {
    return params_.transforms_from_priors();
  }

  ParamSet& params() { return params_; }

  // Posterior probability of observing a time at most `y`, averaged over a
  // weighted (theta, location) sample: sum_m w_m G(y | loc_m, xi_m, sigma_m).
  // Weights must be normalized.
  double record_probability(const std::vector<Vector>& thetas,
                            std::span<const double> weights,
                            std::span<const double> locations, double y) const;

  // Initial-location hyperparameters (loc_0 ~ N(m, s^2), trend_0 ~ N(0, s2^2)).
  double init_loc_mean = 520.0;
  double init_loc_sd = 10.0;
  double init_trend_sd = 1.0;

 private:
  struct Coeffs {
    double nu, xi, sigma;
  };
  Coeffs unpack(const Vector& theta) const;
  ParamSet params_;
};

}  // namespace ssm
