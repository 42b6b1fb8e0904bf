#pragma once

#include <vector>

#include "ssm/ibis.hpp"
#include "ssm/model.hpp"
#include "ssm/pf.hpp"

namespace ssm {

// Batch particle-marginal Metropolis-Hastings over the full dataset.
struct PmmhConfig {
  int n_iter = 10000;
  int n_x = 100;
  ProposalKind proposal = ProposalKind::kRandomWalk;
  double init_scale = 0.5;        // pre-adaptation random-walk sd multiplier
  bool adapt = true;              // learn the RW covariance from the chain
  double adapt_burnin_frac = 0.2; // adaptation frozen after this fraction
  int init_retry_budget = 100;    // retries for a non-degenerate initial filter
  bool record_proposals = false;  // keep per-iteration bookkeeping
  int thin = 1;
};

struct PmmhProposalRecord {
  Vector from, to;
  double log_score_from = 0.0, log_score_to = 0.0;  // log prior + log Z-hat
  double log_proposal_correction = 0.0;             // log T(to,from)-log T(from,to)
  double log_u = 0.0;
  bool accepted = false;
};

struct PmmhChain {
  std::vector<Vector> samples;     // thinned
  std::vector<double> log_zhats;   // matching estimates
  long accepted = 0;
  long n_iter = 0;
  std::vector<PmmhProposalRecord> records;

  double acceptance_rate() const {
    return n_iter > 0 ? static_cast<double>(accepted) / n_iter : 0.0;
  }
};

PmmhChain pmmh_run(const Model& model, const Dataset& data, const PmmhConfig& config,
                   RngStream root);

}  // namespace ssm
