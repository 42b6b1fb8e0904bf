#include "ssm/models/athletics.hpp"

#include <algorithm>
#include <cmath>

#include "ssm/errors.hpp"
#include "ssm/util.hpp"

namespace ssm {
namespace {

void check_gev_params(double xi, double sigma) {
  if (!(sigma > 0.0)) throw InvalidParameterError("gev: sigma must be > 0");
  if (xi == 0.0) throw InvalidParameterError("gev: xi must be nonzero");
}

// Bracket term {1 - xi (y - mu) / sigma}; the law lives where it is positive.
inline double gev_bracket(double y, double mu, double xi, double sigma) {
  return 1.0 - xi * (y - mu) / sigma;
}

}  // namespace

double gev_cdf(double y, double mu, double xi, double sigma) {
  check_gev_params(xi, sigma);
  const double s = gev_bracket(y, mu, xi, sigma);
  if (s <= 0.0) return xi < 0.0 ? 0.0 : 1.0;
  // expm1 keeps probabilities exact deep in the lower tail.
  return -std::expm1(-std::pow(s, -1.0 / xi));
}

double gev_log_survival(double y, double mu, double xi, double sigma) {
  check_gev_params(xi, sigma);
  const double s = gev_bracket(y, mu, xi, sigma);
  if (s <= 0.0) return xi < 0.0 ? 0.0 : kNegInf;
  return -std::pow(s, -1.0 / xi);
}

double gev_logpdf(double y, double mu, double xi, double sigma) {
  check_gev_params(xi, sigma);
  const double s = gev_bracket(y, mu, xi, sigma);
  if (s <= 0.0) return kNegInf;
  return -std::log(sigma) + (-1.0 / xi - 1.0) * std::log(s) - std::pow(s, -1.0 / xi);
}

double gev_inv_cdf(double p, double mu, double xi, double sigma) {
  check_gev_params(xi, sigma);
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameterError("gev quantile: p in (0,1)");
  const double s = std::pow(-std::log1p(-p), -xi);
  return mu + sigma * (1.0 - s) / xi;
}

AthleticsModel::AthleticsModel() {
  params_.add("nu", Prior1D::exponential(0.2));
  params_.add("xi", Prior1D::exponential_neg(0.5));
  params_.add("sigma", Prior1D::exponential(0.2));
}

AthleticsModel::Coeffs AthleticsModel::unpack(const Vector& theta) const {
  const Vector full = params_.expand(theta);
  return {full[0], full[1], full[2]};
}

Vector AthleticsModel::prior_sample(RngStream& rng) const {
  return params_.sample_free(rng);
}

double AthleticsModel::prior_logpdf(const Vector& theta) const {
  double lp = params_.logpdf_free(theta);
  if (lp == kNegInf) return kNegInf;
  const Coeffs c = unpack(theta);
  if (!(c.nu > 0.0) || !(c.xi < 0.0) || !(c.sigma > 0.0)) return kNegInf;
  return lp;
}

void AthleticsModel::init_sample(const Vector& theta, std::span<double> x,
                                 RngStream& rng) const {
  // Advance the time-0 draw once so x holds the time-1 state.
  const double x0[2] = {init_loc_mean + init_loc_sd * rng.normal(),
                        init_trend_sd * rng.normal()};
  transition_sample(theta, std::span<const double>(x0, 2), 0, x, rng);
}

void AthleticsModel::transition_sample(const Vector& theta, std::span<const double> x,
                                       int, std::span<double> x_next,
                                       RngStream& rng) const {
  const Coeffs c = unpack(theta);
  // Cholesky factor of [[1/3,1/2],[1/2,1]] is [[1/sqrt(3),0],[sqrt(3)/2,1/2]].
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  const double loc = x[0], trend = x[1];
  x_next[0] = loc + trend + c.nu * z1 / std::sqrt(3.0);
  x_next[1] = trend + c.nu * (std::sqrt(3.0) / 2.0 * z1 + 0.5 * z2);
}

double AthleticsModel::obs_logpdf(const Vector& theta, std::span<const double> x,
                                  const Observation& y, int) const {
  if (y.missing) return 0.0;
  if (!(y.y[0] < y.y[1]))
    throw InvalidObservationError("athletics observation needs y1 < y2");
  const Coeffs c = unpack(theta);
  const double loc = x[0];
  double lp = gev_log_survival(y.y[1], loc, c.xi, c.sigma);
  for (int i = 0; i < 2; ++i) {
    const double lg = gev_logpdf(y.y[i], loc, c.xi, c.sigma);
    if (lg == kNegInf) return kNegInf;
    lp += lg - gev_log_survival(y.y[i], loc, c.xi, c.sigma);
  }
  return lp;
}

void AthleticsModel::obs_sample(const Vector& theta, std::span<const double> x, int,
                                std::span<double> y, RngStream& rng) const {
  const Coeffs c = unpack(theta);
  const double loc = x[0];
  // y1 is the annual minimum (marginally GEV); y2 | y1 is the same law
  // truncated to (y1, inf), drawn by inverting the cdf.
  const double u1 = rng.uniform01();
  const double y1 = gev_inv_cdf(std::max(u1, 1e-300), loc, c.xi, c.sigma);
  const double g1 = gev_cdf(y1, loc, c.xi, c.sigma);
  const double u2 = rng.uniform01();
  const double p2 = g1 + u2 * (1.0 - g1);
  const double y2 = gev_inv_cdf(std::min(p2, 1.0 - 1e-16), loc, c.xi, c.sigma);
  y[0] = y1;
  y[1] = std::max(y2, std::nextafter(y1, 1e308));
}

double AthleticsModel::record_probability(const std::vector<Vector>& thetas,
                                          std::span<const double> weights,
                                          std::span<const double> locations,
                                          double y) const {
  double p = 0.0;
  for (std::size_t m = 0; m < thetas.size(); ++m) {
    const Coeffs c = unpack(thetas[m]);
    p += weights[m] * gev_cdf(y, locations[m], c.xi, c.sigma);
  }
  return p;
}

}  // namespace ssm
