#pragma once

#include "ssm/model.hpp"

namespace ssm {

// Univariate AR(1) with Gaussian observation noise:
//   x_{t+1} = rho x_t + sigma eps_t,  y_t = x_t + tau eta_t,
//   x_1 ~ N(0, sigma^2 / (1 - rho^2)).
// Kalman-tractable; serves as the exact-likelihood reference model.
class LinearGaussianModel : public Model {
 public:
  LinearGaussianModel(Prior1D rho = Prior1D::uniform(-1.0, 1.0),
                      Prior1D sigma = Prior1D::exponential(1.0),
                      Prior1D tau = Prior1D::exponential(1.0));

  int theta_dim() const override { return params_.free_dim(); }
  int state_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
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

  std::optional<LgssForm> lgss_form(const Vector& theta) const override;

  std::vector<ParamTransform> theta_transforms() const override {
    return params_.transforms_from_priors();
  }

  ParamSet& params() { return params_; }

 private:
  struct Coeffs {
    double rho, sigma, tau;
  };
  Coeffs unpack(const Vector& theta) const;
  ParamSet params_;
};

}  // namespace ssm
