#include "ssm/models/sv.hpp"

#include <cmath>

#include "ssm/errors.hpp"
#include "ssm/util.hpp"

namespace ssm {

SvFactorStep sv_factor_transition(double xi, double omega2, double lambda,
                                  double z_prev, RngStream& rng) {
  const long k = rng.poisson(lambda * xi * xi / omega2);
  double z = std::exp(-lambda) * z_prev;
  double jump_sum = 0.0;
  for (long j = 0; j < k; ++j) {
    const double decay = rng.uniform01();  // t+1-c_j for c_j ~ U(t, t+1)
    const double e = rng.exponential(xi / omega2);
    z += std::exp(-lambda * decay) * e;
    jump_sum += e;
  }
  const double v = (z_prev - z + jump_sum) / lambda;
  return {v, z, jump_sum};
}

SvModel::SvModel(Variant variant) : variant_(variant) {
  params_.add("mu", Prior1D::normal(0.0, 10.0));
  params_.add("beta", Prior1D::normal(0.0, 10.0));
  params_.add("xi", Prior1D::exponential(0.2));
  params_.add("omega2", Prior1D::exponential(0.2));
  params_.add("lambda1", Prior1D::exponential(1.0));
  if (variant_ != Variant::kOneFactor) {
    params_.add("lambda_gap", Prior1D::exponential(0.5));
    params_.add("w", Prior1D::uniform(0.0, 1.0));
    if (variant_ == Variant::kTwoFactorLeverage) {
      params_.add("rho1", Prior1D::normal(0.0, 10.0));
      params_.add("rho2", Prior1D::normal(0.0, 10.0));
    }
  }
}

SvModel::Coeffs SvModel::unpack(const Vector& theta) const {
  const Vector full = params_.expand(theta);
  Coeffs c{};
  c.mu = full[0];
  c.beta = full[1];
  c.xi = full[2];
  c.omega2 = full[3];
  c.lambda1 = full[4];
  if (variant_ == Variant::kOneFactor) {
    c.lambda2 = c.lambda1;
    c.w = 1.0;
    c.rho1 = c.rho2 = 0.0;
  } else {
    c.lambda2 = c.lambda1 + full[5];
    c.w = full[6];
    if (variant_ == Variant::kTwoFactorLeverage) {
      c.rho1 = full[7];
      c.rho2 = full[8];
    } else {
      c.rho1 = c.rho2 = 0.0;
    }
  }
  return c;
}

Vector SvModel::prior_sample(RngStream& rng) const { return params_.sample_free(rng); }

double SvModel::prior_logpdf(const Vector& theta) const {
  double lp = params_.logpdf_free(theta);
  if (lp == kNegInf) return kNegInf;
  const Coeffs c = unpack(theta);
  if (!(c.xi > 0.0) || !(c.omega2 > 0.0) || !(c.lambda1 > 0.0)) return kNegInf;
  if (variant_ != Variant::kOneFactor &&
      (!(c.lambda2 > c.lambda1) || !(c.w > 0.0 && c.w < 1.0)))
    return kNegInf;
  return lp;
}

void SvModel::init_sample(const Vector& theta, std::span<double> x,
                          RngStream& rng) const {
  const Coeffs c = unpack(theta);
  // Stationary start: z_0 ~ Gamma(xi^2/omega2, xi/omega2) per factor, then one
  // transition produces the time-1 state (v_1, z_1, u_1).
  if (variant_ == Variant::kOneFactor) {
    const double z0 = rng.gamma(c.xi * c.xi / c.omega2, c.xi / c.omega2);
    const SvFactorStep s = sv_factor_transition(c.xi, c.omega2, c.lambda1, z0, rng);
    x[0] = s.v;
    x[1] = s.z;
    x[2] = s.u;
  } else {
    const double weights[2] = {c.w, 1.0 - c.w};
    const double lambdas[2] = {c.lambda1, c.lambda2};
    for (int i = 0; i < 2; ++i) {
      const double xi_i = weights[i] * c.xi;
      const double om_i = weights[i] * c.omega2;
      const double z0 = rng.gamma(xi_i * xi_i / om_i, xi_i / om_i);
      const SvFactorStep s = sv_factor_transition(xi_i, om_i, lambdas[i], z0, rng);
      x[3 * i + 0] = s.v;
      x[3 * i + 1] = s.z;
      x[3 * i + 2] = s.u;
    }
  }
}

void SvModel::transition_sample(const Vector& theta, std::span<const double> x, int,
                                std::span<double> x_next, RngStream& rng) const {
  const Coeffs c = unpack(theta);
  if (variant_ == Variant::kOneFactor) {
    const SvFactorStep s = sv_factor_transition(c.xi, c.omega2, c.lambda1, x[1], rng);
    x_next[0] = s.v;
    x_next[1] = s.z;
    x_next[2] = s.u;
  } else {
    const double weights[2] = {c.w, 1.0 - c.w};
    const double lambdas[2] = {c.lambda1, c.lambda2};
    for (int i = 0; i < 2; ++i) {
      const SvFactorStep s = sv_factor_transition(
          weights[i] * c.xi, weights[i] * c.omega2, lambdas[i], x[3 * i + 1], rng);
      x_next[3 * i + 0] = s.v;
      x_next[3 * i + 1] = s.z;
      x_next[3 * i + 2] = s.u;
    }
  }
}

double SvModel::total_v(std::span<const double> x) const {
  return variant_ == Variant::kOneFactor ? x[0] : x[0] + x[3];
}

double SvModel::obs_mean(const Coeffs& c, std::span<const double> x) const {
  double mean = c.mu + c.beta * total_v(x);
  if (variant_ == Variant::kTwoFactorLeverage) {
    // Jump-sum feedback with its compensator so the leverage term has mean 0.
    mean += c.rho1 * x[2] + c.rho2 * x[5] -
            c.xi * (c.w * c.rho1 * c.lambda1 + (1.0 - c.w) * c.rho2 * c.lambda2);
  }
  return mean;
}

double SvModel::obs_logpdf(const Vector& theta, std::span<const double> x,
                           const Observation& y, int) const {
  if (y.missing) return 0.0;
  const Coeffs c = unpack(theta);
  const double v = total_v(x);
  if (!(v > 0.0)) return kNegInf;  // underflow-killed particle
  return log_normal_pdf(y.y[0], obs_mean(c, x), v);
}

void SvModel::obs_sample(const Vector& theta, std::span<const double> x, int,
                         std::span<double> y, RngStream& rng) const {
  const Coeffs c = unpack(theta);
  const double v = total_v(x);
  y[0] = obs_mean(c, x) + std::sqrt(v) * rng.normal();
}

}  // namespace ssm
