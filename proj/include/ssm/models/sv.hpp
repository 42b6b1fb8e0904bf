#pragma once

#include "ssm/model.hpp"

namespace ssm {

// One factor of the Levy-driven volatility dynamics. Takes the factor's
// stationary mean/variance (xi, omega2) and memory lambda; the state triple
// is (v, z, u): actual volatility over the period, spot volatility at the
// period end, and the sum of jump sizes that landed in the period.
struct SvFactorStep {
  double v, z, u;
};
SvFactorStep sv_factor_transition(double xi, double omega2, double lambda,
                                  double z_prev, RngStream& rng);

// Levy-driven stochastic volatility.
//   One factor: theta = (mu, beta, xi, omega2, lambda), state (v, z, u).
//   Two factors: theta = (mu, beta, xi, omega2, lambda1, lambda_gap, w)
//     plus (rho1, rho2) with leverage; state is the two factor triples and the
//     observation sees v = v1 + v2 and, under leverage, the jump sums u_i.
// lambda2 = lambda1 + lambda_gap keeps lambda2 > lambda1 identifiable.
class SvModel : public Model {
 public:
  enum class Variant { kOneFactor, kTwoFactor, kTwoFactorLeverage };

  explicit SvModel(Variant variant);

  int theta_dim() const override { return params_.free_dim(); }
  int state_dim() const override { return variant_ == Variant::kOneFactor ? 3 : 6; }
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

  Variant variant() const { return variant_; }
  std::vector<ParamTransform> theta_transforms() const override {
    return params_.transforms_from_priors();
  }

  ParamSet& params() { return params_; }

 private:
  struct Coeffs {
    double mu, beta, xi, omega2;
    double lambda1, lambda2, w;  // one-factor: lambda1 only, w = 1
    double rho1, rho2;
  };
  Coeffs unpack(const Vector& theta) const;
  double obs_mean(const Coeffs& c, std::span<const double> x) const;
  double total_v(std::span<const double> x) const;

  Variant variant_;
  ParamSet params_;
};

}  // namespace ssm
