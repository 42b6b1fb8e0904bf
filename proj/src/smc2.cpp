#include "ssm/smc2.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "ssm/errors.hpp"
#include "ssm/util.hpp"

namespace ssm {
namespace {

// Purpose tags for stream derivation off the sampler root.
constexpr std::uint64_t kTagPrior = 1;
constexpr std::uint64_t kTagStep = 2;
constexpr std::uint64_t kTagResample = 3;
constexpr std::uint64_t kTagMove = 4;
constexpr std::uint64_t kTagExchange = 5;

void record_diag(Smc2State& state, double ess_before, bool resampled,
                 double acceptance, bool nx_changed, double log_Lhat) {
  Smc2Diag diag;
  diag.t = state.t;
  diag.ess = ess_before;
  diag.resampled = resampled;
  diag.acceptance_rate = acceptance;
  diag.n_x = state.n_x;
  diag.log_Lhat = log_Lhat;
  diag.cum_log_evidence = state.log_evidence;
  diag.nx_changed = nx_changed;
  state.diagnostics.push_back(diag);
}

// Weight update + evidence + degeneracy policy shared by init and step.
void post_update(Smc2State& state, const Model& model, const Dataset& data,
                 double log_Lhat) {
  state.log_evidence += log_Lhat;
  const double ess_before = ess_from_log_weights(state.cloud.log_weights);
  record_diag(state, ess_before, false, 0.0, false, log_Lhat);
  if (ess_before < state.config.ess_threshold * state.cloud.size()) {
    rejuvenate(state, model, data);
  }
}

}  // namespace

Smc2State smc2_init(const Model& model, const Smc2Config& config, const Dataset& data,
                    RngStream root) {
  if (config.n_theta < 2) throw InvalidParameterError("smc2: n_theta must be >= 2");
  if (config.n_x < 1) throw InvalidParameterError("smc2: n_x must be >= 1");
  if (data.empty()) throw InvalidParameterError("smc2: empty dataset");

  Smc2State state;
  state.config = config;
  state.root = root;
  state.n_x = config.n_x;
  const int n = config.n_theta;
  state.cloud.thetas.resize(n);
  state.cloud.log_weights.assign(n, 0.0);
  state.cloud.attachments.resize(n);

  RngStream prior_rng = root.split(kTagPrior);
  for (int m = 0; m < n; ++m) {
    RngStream r = prior_rng.split(static_cast<std::uint64_t>(m));
    state.cloud.thetas[m] = model.prior_sample(r);
  }

  RngStream step_rng = root.split(kTagStep).split(1);
  parallel_for(n, config.n_threads, [&](int m) {
    state.cloud.attachments[m] =
        pf_init(model, state.cloud.thetas[m], state.n_x, data[0],
                step_rng.split(static_cast<std::uint64_t>(m)),
                config.store_trajectories);
    state.cloud.log_weights[m] = state.cloud.attachments[m].last_log_increment;
  });
  state.t = 1;

  // First evidence increment: mean of the per-theta estimates (prior weights
  // were uniform), log((1/n) sum exp log_w).
  const double log_Lhat =
      logsumexp(state.cloud.log_weights) - std::log(static_cast<double>(n));
  post_update(state, model, data, log_Lhat);
  return state;
}

void smc2_step(Smc2State& state, const Model& model, const Dataset& data) {
  const int n = state.cloud.size();
  const Observation& y = data.at(state.t);
  const int t_next = state.t + 1;

  RngStream step_rng = state.root.split(kTagStep).split(static_cast<std::uint64_t>(t_next));
  const double log_norm_before = logsumexp(state.cloud.log_weights);
  parallel_for(n, state.config.n_threads, [&](int m) {
    PFState& pf = state.cloud.attachments[m];
    pf_step(pf, model, y, step_rng.split(static_cast<std::uint64_t>(m)),
            state.config.inner_resampling);
    state.cloud.log_weights[m] += pf.last_log_increment;
  });
  state.t = t_next;

  const double log_Lhat = logsumexp(state.cloud.log_weights) - log_norm_before;
  post_update(state, model, data, log_Lhat);
}

int pmmh_move(Vector& theta, PFState& filter, const Model& model,
              const Dataset& data_prefix, const ProposalFit& proposal,
              const ThetaTransform& transform, int nx, int n_moves, RngStream rng,
              bool store_trajectories) {
  int accepted = 0;
  Vector eta = transform.to_unconstrained(theta);
  double log_prior = model.prior_logpdf(theta);
  double log_jac = transform.log_jacobian(eta);
  for (int k = 0; k < n_moves; ++k) {
    RngStream move_rng = rng.split(static_cast<std::uint64_t>(k));
    RngStream proposal_rng = move_rng.split(0);
    RngStream filter_rng = move_rng.split(1);

    const Vector cand_eta = proposal.propose(eta, proposal_rng);
    const Vector cand = transform.to_constrained(cand_eta);
    const double cand_log_prior = model.prior_logpdf(cand);
    if (cand_log_prior == kNegInf) continue;  // off support: certain rejection

    PFState cand_filter = pf_full_loglik(model, cand, data_prefix, nx, filter_rng,
                                         store_trajectories);
    const double cand_score =
        cand_log_prior + transform.log_jacobian(cand_eta) + cand_filter.log_zhat;
    const double cur_score = log_prior + log_jac + filter.log_zhat;
    double log_r;
    if (cur_score == kNegInf) {
      log_r = cand_score == kNegInf ? kNegInf : std::numeric_limits<double>::infinity();
    } else {
      log_r = cand_score - cur_score + proposal.log_ratio(eta, cand_eta);
    }
    if (std::log(1.0 - proposal_rng.uniform01()) < log_r) {
      theta = cand;
      eta = cand_eta;
      filter = std::move(cand_filter);
      log_prior = cand_log_prior;
      log_jac = transform.log_jacobian(cand_eta);
      ++accepted;
    }
  }
  return accepted;
}

void rejuvenate(Smc2State& state, const Model& model, const Dataset& data) {
  const int n = state.cloud.size();
  const int t = state.t;
  const Dataset prefix(data.begin(), data.begin() + t);

  // Fit on the weighted cloud before resampling collapses it to duplicates;
  // constrained parameters are handled on their unconstrained scale.
  const ThetaTransform transform(model.theta_transforms());
  const ProposalFit proposal = [&] {
    if (transform.is_identity()) {
      return fit_proposal(state.cloud.thetas, state.cloud.log_weights,
                          state.config.proposal, state.config.rw_scale);
    }
    std::vector<Vector> etas(n);
    for (int m = 0; m < n; ++m)
      etas[m] = transform.to_unconstrained(state.cloud.thetas[m]);
    return fit_proposal(etas, state.cloud.log_weights, state.config.proposal,
                        state.config.rw_scale);
  }();

  const std::vector<double> w = normalized_weights_from_log(state.cloud.log_weights);
  RngStream resample_rng =
      state.root.split(kTagResample).split(static_cast<std::uint64_t>(t));
  const std::vector<int> picks =
      resample_indices(w, n, ResampleScheme::kMultinomial, resample_rng);

  std::vector<Vector> new_thetas(n);
  std::vector<PFState> new_filters(n);
  for (int m = 0; m < n; ++m) {
    new_thetas[m] = state.cloud.thetas[picks[m]];
    new_filters[m] = state.cloud.attachments[picks[m]];
  }
  state.cloud.thetas = std::move(new_thetas);
  state.cloud.attachments = std::move(new_filters);

  RngStream move_rng = state.root.split(kTagMove).split(static_cast<std::uint64_t>(t));
  std::vector<int> accepted(n, 0);
  parallel_for(n, state.config.n_threads, [&](int m) {
    accepted[m] = pmmh_move(state.cloud.thetas[m], state.cloud.attachments[m], model,
                            prefix, proposal, transform, state.n_x,
                            state.config.moves_per_rejuvenation,
                            move_rng.split(static_cast<std::uint64_t>(m)),
                            state.config.store_trajectories);
  });
  std::fill(state.cloud.log_weights.begin(), state.cloud.log_weights.end(), 0.0);

  long total = 0;
  for (int a : accepted) total += a;
  const double rate = static_cast<double>(total) /
                      (static_cast<double>(n) * state.config.moves_per_rejuvenation);

  Smc2Diag& diag = state.diagnostics.back();
  diag.resampled = true;
  diag.acceptance_rate = rate;

  if (state.config.auto_nx) auto_nx_check(state, model, rate, data);
  state.diagnostics.back().n_x = state.n_x;
}

void exchange_step(Smc2State& state, const Model& model, int new_nx,
                   const Dataset& data) {
  if (new_nx < 1) throw InvalidParameterError("exchange_step: new_nx must be >= 1");
  const int n = state.cloud.size();
  const Dataset prefix(data.begin(), data.begin() + state.t);
  RngStream exch_rng =
      state.root.split(kTagExchange).split(static_cast<std::uint64_t>(state.t));
  parallel_for(n, state.config.n_threads, [&](int m) {
    PFState fresh = pf_full_loglik(model, state.cloud.thetas[m], prefix, new_nx,
                                   exch_rng.split(static_cast<std::uint64_t>(m)),
                                   state.config.store_trajectories);
    double& log_w = state.cloud.log_weights[m];
    if (log_w != kNegInf) {
      const double old_log_z = state.cloud.attachments[m].log_zhat;
      log_w += fresh.log_zhat - old_log_z;  // u_exch in log domain
      if (std::isnan(log_w)) log_w = kNegInf;
    }
    state.cloud.attachments[m] = std::move(fresh);
  });
  state.n_x = new_nx;
  if (!state.diagnostics.empty() && state.diagnostics.back().t == state.t) {
    state.diagnostics.back().nx_changed = true;
    state.diagnostics.back().n_x = new_nx;
  }
}

void auto_nx_check(Smc2State& state, const Model& model, double acceptance_rate,
                   const Dataset& data) {
  if (acceptance_rate >= state.config.acceptance_threshold) return;
  if (state.n_x >= state.config.nx_cap) {
    std::cerr << "ssm: n_x already at the cap (" << state.config.nx_cap
              << "), skipping growth at t=" << state.t << "\n";
    return;
  }
  const int grown = static_cast<int>(std::lround(state.n_x * state.config.nx_growth_factor));
  const int new_nx = std::min(std::max(grown, state.n_x + 1), state.config.nx_cap);
  exchange_step(state, model, new_nx, data);
}

WeightedJointSample select_trajectories(const Smc2State& state, RngStream rng) {
  const int n = state.cloud.size();
  WeightedJointSample out;
  out.t = state.t;
  out.state_dim = state.cloud.attachments.empty()
                      ? 0
                      : state.cloud.attachments.front().state_dim;
  out.full_trajectories = state.config.store_trajectories;
  out.log_weights = state.cloud.log_weights;
  out.thetas = state.cloud.thetas;
  out.selected.resize(n);
  out.states.resize(n);
  for (int m = 0; m < n; ++m) {
    const PFState& pf = state.cloud.attachments[m];
    RngStream r = rng.split(static_cast<std::uint64_t>(m));
    const std::vector<int> pick =
        resample_indices(pf.norm_weights, 1, ResampleScheme::kMultinomial, r);
    out.selected[m] = pick[0];
    if (out.full_trajectories) {
      out.states[m] = pf.trajectory(pick[0]);
    } else {
      const auto x = pf.particle(pick[0]);
      out.states[m].assign(x.begin(), x.end());
    }
  }
  return out;
}

double rao_blackwell_estimate(
    const Smc2State& state,
    const std::function<double(const Vector&, std::span<const double>)>& h) {
  const std::vector<double> w = normalized_weights_from_log(state.cloud.log_weights);
  double total = 0.0;
  for (int m = 0; m < state.cloud.size(); ++m) {
    if (w[m] == 0.0) continue;
    const PFState& pf = state.cloud.attachments[m];
    double inner = 0.0;
    for (int nn = 0; nn < pf.nx; ++nn)
      inner += pf.norm_weights[nn] * h(state.cloud.thetas[m], pf.particle(nn));
    total += w[m] * inner;
  }
  return total;
}

double log_evidence_increment(const Smc2State& state) {
  if (state.diagnostics.empty())
    throw InvalidParameterError("no evidence increment recorded yet");
  return state.diagnostics.back().log_Lhat;
}

}  // namespace ssm
