#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssm/prior.hpp"
#include "ssm/rng.hpp"

namespace ssm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Observation {
  Vector y;
  bool missing = false;
};

using Dataset = std::vector<Observation>;

// Linear-Gaussian state-space form: x1 ~ N(m0, P0), x' = F x + N(0, Q),
// y = H x + N(0, R). Models that admit it expose it for exact filtering.
struct LgssForm {
  Matrix F, Q, H, R;
  Vector m0;
  Matrix P0;
};

// How a free parameter is mapped to the unconstrained scale used by
// Metropolis-Hastings proposals.
enum class ParamTransform { kIdentity, kLog, kNegLog };

// Componentwise bijection between the model's parameter space and an
// unconstrained proposal space, with the Jacobian term the acceptance
// ratio needs. kLog covers rates and variances (support x > 0), kNegLog
// negative shape parameters (support x < 0).
class ThetaTransform {
 public:
  ThetaTransform() = default;
  explicit ThetaTransform(std::vector<ParamTransform> tags);

  Vector to_unconstrained(const Vector& theta) const;
  Vector to_constrained(const Vector& eta) const;
  // log |d theta / d eta| at eta.
  double log_jacobian(const Vector& eta) const;
  bool is_identity() const { return identity_; }

 private:
  std::vector<ParamTransform> tags_;
  bool identity_ = true;
};

// Named parameters with 1-D priors; fixed entries are substituted rather
// than sampled, so the free vector theta has dimension free_dim().
class ParamSet {
 public:
  void add(std::string name, Prior1D prior);

  int free_dim() const { return static_cast<int>(free_idx_.size()); }
  int full_dim() const { return static_cast<int>(priors_.size()); }
  const std::vector<std::string>& free_names() const { return free_names_; }
  const Prior1D& prior_of(const std::string& name) const;
  void set_prior(const std::string& name, Prior1D prior);

  Vector sample_free(RngStream& rng) const;
  double logpdf_free(const Vector& theta) const;
  // Expands the free vector into the full parameter vector, fixed values included.
  Vector expand(const Vector& theta) const;
  // Proposal-space transform per free parameter, derived from the prior
  // support: exponential -> log, negated exponential -> log of the negation.
  std::vector<ParamTransform> transforms_from_priors() const;

  std::vector<std::pair<std::string, std::string>> describe() const;

 private:
  std::vector<std::string> names_;
  std::vector<Prior1D> priors_;
  std::vector<int> free_idx_;
  std::vector<std::string> free_names_;
};

// A state-space model as a bundle of samplers and log-density evaluators.
// The transition only needs to be sampled, never evaluated, which admits
// models with intractable transition densities.
class Model {
 public:
  virtual ~Model() = default;

  virtual int theta_dim() const = 0;
  virtual int state_dim() const = 0;
  virtual int obs_dim() const = 0;
  virtual const std::vector<std::string>& theta_names() const = 0;

  virtual Vector prior_sample(RngStream& rng) const = 0;
  virtual double prior_logpdf(const Vector& theta) const = 0;

  // Draw x_1 from the initial law given theta. t counts observations, 1-based.
  virtual void init_sample(const Vector& theta, std::span<double> x,
                           RngStream& rng) const = 0;
  virtual void transition_sample(const Vector& theta, std::span<const double> x,
                                 int t, std::span<double> x_next,
                                 RngStream& rng) const = 0;
  virtual double obs_logpdf(const Vector& theta, std::span<const double> x,
                            const Observation& y, int t) const = 0;
  virtual void obs_sample(const Vector& theta, std::span<const double> x, int t,
                          std::span<double> y, RngStream& rng) const = 0;

  // Exact machinery, present only for Kalman-tractable models.
  virtual std::optional<LgssForm> lgss_form(const Vector& theta) const;
  bool has_exact_loglik() const;
  double exact_loglik(const Vector& theta, const Dataset& data) const;

  // Proposal transform for each free parameter; identity by default.
  virtual std::vector<ParamTransform> theta_transforms() const;
};

struct SimulatedPath {
  Dataset data;
  std::vector<std::vector<double>> states;  // one state vector per t
};

// Forward-simulates T observations under the given (free) parameter vector.
SimulatedPath simulate_model(const Model& model, const Vector& theta, int T,
                             RngStream rng);

}  // namespace ssm
