#include "ssm/models/linear_gaussian.hpp"

#include <cmath>

#include "ssm/errors.hpp"
#include "ssm/util.hpp"

namespace ssm {

LinearGaussianModel::LinearGaussianModel(Prior1D rho, Prior1D sigma, Prior1D tau) {
  params_.add("rho", rho);
  params_.add("sigma", sigma);
  params_.add("tau", tau);
}

LinearGaussianModel::Coeffs LinearGaussianModel::unpack(const Vector& theta) const {
  const Vector full = params_.expand(theta);
  return {full[0], full[1], full[2]};
}

Vector LinearGaussianModel::prior_sample(RngStream& rng) const {
  return params_.sample_free(rng);
}

double LinearGaussianModel::prior_logpdf(const Vector& theta) const {
  double lp = params_.logpdf_free(theta);
  if (lp == kNegInf) return kNegInf;
  const Coeffs c = unpack(theta);
  // Stationarity and positive noise scales regardless of the chosen priors.
  if (!(std::fabs(c.rho) < 1.0) || !(c.sigma > 0.0) || !(c.tau > 0.0)) return kNegInf;
  return lp;
}

void LinearGaussianModel::init_sample(const Vector& theta, std::span<double> x,
                                      RngStream& rng) const {
  const Coeffs c = unpack(theta);
  x[0] = std::sqrt(c.sigma * c.sigma / (1.0 - c.rho * c.rho)) * rng.normal();
}

void LinearGaussianModel::transition_sample(const Vector& theta,
                                            std::span<const double> x, int,
                                            std::span<double> x_next,
                                            RngStream& rng) const {
  const Coeffs c = unpack(theta);
  x_next[0] = c.rho * x[0] + c.sigma * rng.normal();
}

double LinearGaussianModel::obs_logpdf(const Vector& theta, std::span<const double> x,
                                       const Observation& y, int) const {
  if (y.missing) return 0.0;
  const Coeffs c = unpack(theta);
  return log_normal_pdf(y.y[0], x[0], c.tau * c.tau);
}

void LinearGaussianModel::obs_sample(const Vector& theta, std::span<const double> x,
                                     int, std::span<double> y, RngStream& rng) const {
  const Coeffs c = unpack(theta);
  y[0] = x[0] + c.tau * rng.normal();
}

std::optional<LgssForm> LinearGaussianModel::lgss_form(const Vector& theta) const {
  const Coeffs c = unpack(theta);
  LgssForm form;
  form.F = Matrix::Constant(1, 1, c.rho);
  form.Q = Matrix::Constant(1, 1, c.sigma * c.sigma);
  form.H = Matrix::Identity(1, 1);
  form.R = Matrix::Constant(1, 1, c.tau * c.tau);
  form.m0 = Vector::Zero(1);
  form.P0 = Matrix::Constant(1, 1, c.sigma * c.sigma / (1.0 - c.rho * c.rho));
  return form;
}

}  // namespace ssm
