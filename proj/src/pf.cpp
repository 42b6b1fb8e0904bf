#include "ssm/pf.hpp"

#include <algorithm>
#include <cmath>

#include "ssm/errors.hpp"
#include "ssm/util.hpp"

namespace ssm {
namespace {

// Stream tags within one filter time step.
constexpr std::uint64_t kTagResample = 0;
constexpr std::uint64_t kTagPropagate = 1;

// Turns per-particle log-weights into the increment and normalized weights.
// Returns false when no particle carries mass.
bool absorb_weights(PFState& state, std::span<const double> log_w) {
  double m = kNegInf;
  for (double v : log_w) m = std::max(m, v);
  if (m == kNegInf) {
    state.last_log_increment = kNegInf;
    state.log_zhat = kNegInf;
    std::fill(state.norm_weights.begin(), state.norm_weights.end(),
              1.0 / static_cast<double>(state.nx));
    return false;
  }
  double sum = 0.0;
  for (int n = 0; n < state.nx; ++n) {
    state.norm_weights[n] = std::exp(log_w[n] - m);
    sum += state.norm_weights[n];
  }
  for (double& w : state.norm_weights) w /= sum;
  state.last_log_increment = m + std::log(sum) - std::log(static_cast<double>(state.nx));
  state.log_zhat += state.last_log_increment;
  return true;
}

}  // namespace

bool PFState::degenerate() const { return log_zhat == kNegInf; }

std::span<const double> PFState::particle(int n) const {
  return {particles.data() + static_cast<std::size_t>(n) * state_dim,
          static_cast<std::size_t>(state_dim)};
}

std::vector<double> PFState::trajectory(int n) const {
  if (!store_trajectories)
    throw NotStoredError("trajectory requested from a filter without storage");
  std::vector<double> out(static_cast<std::size_t>(t) * state_dim);
  int idx = n;
  for (int s = t; s >= 1; --s) {
    const auto& snap = history[s - 1];
    std::copy_n(snap.data() + static_cast<std::size_t>(idx) * state_dim, state_dim,
                out.data() + static_cast<std::size_t>(s - 1) * state_dim);
    if (s >= 2) idx = ancestors[s - 2][idx];
  }
  return out;
}

PFState pf_init(const Model& model, Vector theta, int nx, const Observation& y1,
                RngStream rng, bool store_trajectories) {
  if (nx < 1) throw InvalidParameterError("pf_init: nx must be >= 1");
  PFState state;
  state.theta = std::move(theta);
  state.nx = nx;
  state.state_dim = model.state_dim();
  state.particles.resize(static_cast<std::size_t>(nx) * state.state_dim);
  state.norm_weights.resize(nx);
  state.store_trajectories = store_trajectories;
  state.log_zhat = 0.0;

  RngStream draw = rng.split(kTagPropagate);
  std::vector<double> log_w(nx);
  for (int n = 0; n < nx; ++n) {
    std::span<double> x(state.particles.data() + static_cast<std::size_t>(n) * state.state_dim,
                        state.state_dim);
    model.init_sample(state.theta, x, draw);
    log_w[n] = model.obs_logpdf(state.theta, x, y1, 1);
  }
  state.t = 1;
  absorb_weights(state, log_w);
  if (store_trajectories) state.history.push_back(state.particles);
  return state;
}

void pf_step(PFState& state, const Model& model, const Observation& yt, RngStream rng,
             ResampleScheme scheme) {
  const int nx = state.nx;
  const int dim = state.state_dim;
  RngStream resample_rng = rng.split(kTagResample);
  RngStream draw = rng.split(kTagPropagate);

  const std::vector<int> parents =
      resample_indices(state.norm_weights, nx, scheme, resample_rng);

  std::vector<double> gathered(state.particles.size());
  for (int n = 0; n < nx; ++n) {
    std::copy_n(state.particles.data() + static_cast<std::size_t>(parents[n]) * dim, dim,
                gathered.data() + static_cast<std::size_t>(n) * dim);
  }

  std::vector<double> log_w(nx);
  const int t_next = state.t + 1;
  for (int n = 0; n < nx; ++n) {
    std::span<const double> parent(gathered.data() + static_cast<std::size_t>(n) * dim,
                                   dim);
    std::span<double> child(state.particles.data() + static_cast<std::size_t>(n) * dim,
                            dim);
    model.transition_sample(state.theta, parent, state.t, child, draw);
    log_w[n] = model.obs_logpdf(state.theta, child, yt, t_next);
  }

  state.t = t_next;
  absorb_weights(state, log_w);  // -inf log_zhat absorbs any later increment

  if (state.store_trajectories) {
    state.ancestors.push_back(parents);
    state.history.push_back(state.particles);
  }
}

PFState pf_full_loglik(const Model& model, Vector theta, const Dataset& data, int nx,
                       RngStream rng, bool store_trajectories, ResampleScheme scheme) {
  if (data.empty()) throw InvalidParameterError("pf_full_loglik: empty dataset");
  PFState state =
      pf_init(model, std::move(theta), nx, data[0], rng.split(1), store_trajectories);
  for (std::size_t i = 1; i < data.size(); ++i) {
    pf_step(state, model, data[i], rng.split(static_cast<std::uint64_t>(i + 1)), scheme);
  }
  return state;
}

double ess(std::span<const double> weights) { return ess_from_weights(weights); }

double ess_log(std::span<const double> log_weights) {
  return ess_from_log_weights(log_weights);
}

}  // namespace ssm
