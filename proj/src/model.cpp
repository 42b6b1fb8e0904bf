#include "ssm/model.hpp"

#include <algorithm>
#include <cmath>

#include "ssm/errors.hpp"
#include "ssm/kalman.hpp"
#include "ssm/util.hpp"

namespace ssm {

void ParamSet::add(std::string name, Prior1D prior) {
  if (!prior.is_fixed()) {
    free_idx_.push_back(static_cast<int>(names_.size()));
    free_names_.push_back(name);
  }
  names_.push_back(std::move(name));
  priors_.push_back(prior);
}

const Prior1D& ParamSet::prior_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InvalidParameterError("unknown parameter: " + name);
  return priors_[it - names_.begin()];
}

void ParamSet::set_prior(const std::string& name, Prior1D prior) {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InvalidParameterError("unknown parameter: " + name);
  priors_[it - names_.begin()] = prior;
  // Rebuild the free index as fixedness may have changed.
  free_idx_.clear();
  free_names_.clear();
  for (std::size_t i = 0; i < priors_.size(); ++i) {
    if (!priors_[i].is_fixed()) {
      free_idx_.push_back(static_cast<int>(i));
      free_names_.push_back(names_[i]);
    }
  }
}

Vector ParamSet::sample_free(RngStream& rng) const {
  Vector out(free_dim());
  for (int i = 0; i < free_dim(); ++i) out[i] = priors_[free_idx_[i]].sample(rng);
  return out;
}

double ParamSet::logpdf_free(const Vector& theta) const {
  if (theta.size() != free_dim())
    throw InvalidParameterError("theta has wrong dimension");
  double lp = 0.0;
  for (int i = 0; i < free_dim(); ++i) {
    lp += priors_[free_idx_[i]].logpdf(theta[i]);
    if (lp == kNegInf) return kNegInf;
  }
  return lp;
}

Vector ParamSet::expand(const Vector& theta) const {
  Vector full(full_dim());
  for (int i = 0; i < full_dim(); ++i)
    if (priors_[i].is_fixed()) full[i] = priors_[i].fixed_value();
  for (int i = 0; i < free_dim(); ++i) full[free_idx_[i]] = theta[i];
  return full;
}

std::vector<std::pair<std::string, std::string>> ParamSet::describe() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i)
    out.emplace_back(names_[i], priors_[i].to_string());
  return out;
}

ThetaTransform::ThetaTransform(std::vector<ParamTransform> tags)
    : tags_(std::move(tags)) {
  for (ParamTransform tag : tags_)
    if (tag != ParamTransform::kIdentity) identity_ = false;
}

Vector ThetaTransform::to_unconstrained(const Vector& theta) const {
  if (identity_) return theta;
  Vector eta(theta.size());
  for (int i = 0; i < theta.size(); ++i) {
    switch (tags_[i]) {
      case ParamTransform::kIdentity:
        eta[i] = theta[i];
        break;
      case ParamTransform::kLog:
        eta[i] = std::log(std::max(theta[i], 1e-300));
        break;
      case ParamTransform::kNegLog:
        eta[i] = std::log(std::max(-theta[i], 1e-300));
        break;
    }
  }
  return eta;
}

Vector ThetaTransform::to_constrained(const Vector& eta) const {
  if (identity_) return eta;
  Vector theta(eta.size());
  for (int i = 0; i < eta.size(); ++i) {
    switch (tags_[i]) {
      case ParamTransform::kIdentity:
        theta[i] = eta[i];
        break;
      case ParamTransform::kLog:
        theta[i] = std::exp(eta[i]);
        break;
      case ParamTransform::kNegLog:
        theta[i] = -std::exp(eta[i]);
        break;
    }
  }
  return theta;
}

double ThetaTransform::log_jacobian(const Vector& eta) const {
  if (identity_) return 0.0;
  double lj = 0.0;
  for (int i = 0; i < eta.size(); ++i)
    if (tags_[i] != ParamTransform::kIdentity) lj += eta[i];
  return lj;
}

std::vector<ParamTransform> ParamSet::transforms_from_priors() const {
  std::vector<ParamTransform> tags;
  tags.reserve(free_idx_.size());
  for (int idx : free_idx_) {
    switch (priors_[idx].kind()) {
      case Prior1D::Kind::kExponential:
        tags.push_back(ParamTransform::kLog);
        break;
      case Prior1D::Kind::kExponentialNeg:
        tags.push_back(ParamTransform::kNegLog);
        break;
      default:
        tags.push_back(ParamTransform::kIdentity);
    }
  }
  return tags;
}

std::optional<LgssForm> Model::lgss_form(const Vector&) const { return std::nullopt; }

std::vector<ParamTransform> Model::theta_transforms() const {
  return std::vector<ParamTransform>(theta_dim(), ParamTransform::kIdentity);
}

bool Model::has_exact_loglik() const {
  RngStream probe(0);
  // A model is tractable when it exposes the linear-Gaussian form for any
  // valid theta; probing the prior mean of a sample is sufficient here.
  RngStream r = probe.split(0);
  return lgss_form(prior_sample(r)).has_value();
}

double Model::exact_loglik(const Vector& theta, const Dataset& data) const {
  const auto form = lgss_form(theta);
  if (!form)
    throw InvalidParameterError("exact_loglik requested from an intractable model");
  return kalman_loglik(*form, data);
}

SimulatedPath simulate_model(const Model& model, const Vector& theta, int T,
                             RngStream rng) {
  SimulatedPath out;
  out.data.reserve(T);
  out.states.reserve(T);
  std::vector<double> x(model.state_dim()), x_next(model.state_dim());
  RngStream state_rng = rng.split(1);
  RngStream obs_rng = rng.split(2);
  for (int t = 1; t <= T; ++t) {
    if (t == 1) {
      model.init_sample(theta, x, state_rng);
    } else {
      model.transition_sample(theta, x, t - 1, x_next, state_rng);
      std::swap(x, x_next);
    }
    Observation obs;
    obs.y.resize(model.obs_dim());
    model.obs_sample(theta, x, t, std::span<double>(obs.y.data(), obs.y.size()), obs_rng);
    out.data.push_back(std::move(obs));
    out.states.push_back(x);
  }
  return out;
}

}  // namespace ssm
