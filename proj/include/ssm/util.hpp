#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace ssm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(x))) with max-shift; returns -inf for an empty or all -inf input.
double logsumexp(std::span<const double> x);

// Normalizes log-weights to linear-domain weights summing to 1.
// Throws DegenerateWeightsError if no entry carries mass.
std::vector<double> normalized_weights_from_log(std::span<const double> log_w);

// (sum w)^2 / sum(w^2) computed from log-weights via max-shift.
double ess_from_log_weights(std::span<const double> log_w);

// Same on linear-domain (unnormalized, nonnegative) weights.
double ess_from_weights(std::span<const double> w);

double log_normal_pdf(double x, double mean, double var);

// Sample mean / unbiased variance of a series.
double mean_of(std::span<const double> x);
double variance_of(std::span<const double> x);

// Weighted mean with weights assumed normalized to 1.
double weighted_mean(std::span<const double> w, std::span<const double> x);

// Runs fn(i) for i in [0, n). n_threads <= 1 runs inline. The result of fn
// must depend only on i, never on scheduling, so any thread count produces
// identical output.
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn);

}  // namespace ssm
