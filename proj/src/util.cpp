#include "ssm/util.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "ssm/errors.hpp"

namespace ssm {

double logsumexp(std::span<const double> x) {
  double m = kNegInf;
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;  // empty, all -inf, or a NaN/inf poisoned max
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

std::vector<double> normalized_weights_from_log(std::span<const double> log_w) {
  double m = kNegInf;
  for (double v : log_w) {
    if (!std::isnan(v)) m = std::max(m, v);
  }
  if (m == kNegInf) throw DegenerateWeightsError("all log-weights are -inf or NaN");
  std::vector<double> w(log_w.size());
  double s = 0.0;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    w[i] = std::isnan(log_w[i]) ? 0.0 : std::exp(log_w[i] - m);
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

double ess_from_log_weights(std::span<const double> log_w) {
  double m = kNegInf;
  for (double v : log_w) m = std::max(m, v);
  if (m == kNegInf) throw DegenerateWeightsError("ESS of an all-zero weight vector");
  double s1 = 0.0, s2 = 0.0;
  for (double v : log_w) {
    double e = std::exp(v - m);
    s1 += e;
    s2 += e * e;
  }
  return s1 * s1 / s2;
}

double ess_from_weights(std::span<const double> w) {
  double s1 = 0.0, s2 = 0.0;
  for (double v : w) {
    if (std::isnan(v)) continue;
    s1 += v;
    s2 += v * v;
  }
  if (s2 <= 0.0) throw DegenerateWeightsError("ESS of an all-zero weight vector");
  return s1 * s1 / s2;
}

double log_normal_pdf(double x, double mean, double var) {
  if (!(var > 0.0)) return kNegInf;
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double weighted_mean(std::span<const double> w, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
  return s;
}

void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  n_threads = std::min(n_threads, n);
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  // Static contiguous partition: the work split is a function of (n, n_threads)
  // only, and fn writes to per-index slots, so results match a serial run.
  for (int w = 0; w < n_threads; ++w) {
    const int lo = static_cast<int>(static_cast<long long>(n) * w / n_threads);
    const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / n_threads);
    workers.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ssm
