#include "ssm/rng.hpp"

#include <algorithm>
#include <cmath>

#include "ssm/errors.hpp"

namespace ssm {
namespace {

constexpr std::uint64_t kPhiloxM = 0xD2B74407B1CE6E93ULL;
constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Philox2x64-10 block: PRF keyed by `key` on the 128-bit counter (c0, c1).
inline void philox_block(std::uint64_t key, std::uint64_t c0, std::uint64_t c1,
                         std::uint64_t out[2]) {
  std::uint64_t x0 = c0, x1 = c1, k = key;
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(kPhiloxM) * x0;
    const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
    const std::uint64_t lo = static_cast<std::uint64_t>(prod);
    x0 = hi ^ k ^ x1;
    x1 = lo;
    k += kWeyl;
  }
  out[0] = x0;
  out[1] = x1;
}

}  // namespace

RngStream RngStream::split(std::uint64_t child_tag) const {
  // Path-sensitive combine: split(split(s,a),b) != split(split(s,b),a).
  return RngStream(seed_, mix64(id_ + kWeyl * (child_tag + 1)));
}

void RngStream::refill() {
  philox_block(seed_, counter_++, id_, buf_);
  buf_pos_ = 0;
}

std::uint64_t RngStream::next_u64() {
  if (buf_pos_ >= 2) refill();
  return buf_[buf_pos_++];
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  // Box-Muller; pairs are not cached so the draw count stays predictable.
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(2.0 * M_PI * u2);
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) throw InvalidParameterError("exponential rate must be > 0");
  return -std::log1p(-uniform01()) / rate;
}

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw InvalidParameterError("gamma shape and rate must be > 0");
  if (shape < 1.0) {
    // Boost to shape+1 and rescale by U^(1/shape).
    const double u = 1.0 - uniform01();  // (0, 1]
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - uniform01();  // (0, 1]
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

long RngStream::poisson(double mean) {
  if (mean < 0.0 || std::isnan(mean))
    throw InvalidParameterError("poisson mean must be >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }
  // Hormann's PTRS transformed rejection for large means.
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    const double u = uniform01() - 0.5;
    const double v = uniform01();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        kf * log_mean - mean - std::lgamma(kf + 1.0)) {
      return static_cast<long>(kf);
    }
  }
}

std::vector<int> resample_indices(std::span<const double> weights, int count,
                                  ResampleScheme scheme, RngStream& rng) {
  const int n = static_cast<int>(weights.size());
  if (n == 0 || count < 0) throw InvalidParameterError("resample on empty weights");
  double total = 0.0;
  for (double w : weights) {
    if (w > 0.0) total += w;
  }
  if (!(total > 0.0)) throw DegenerateWeightsError("resample: all weights zero or NaN");

  std::vector<double> cum(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    if (weights[i] > 0.0) acc += weights[i];
    cum[i] = acc;
  }
  cum[n - 1] = total;  // guard against round-off at the top end

  std::vector<int> out(count);
  if (scheme == ResampleScheme::kMultinomial) {
    for (int m = 0; m < count; ++m) {
      const double u = rng.uniform01() * total;
      const int idx = static_cast<int>(
          std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
      out[m] = std::min(idx, n - 1);
    }
  } else {
    const double step = total / static_cast<double>(count);
    double pos = rng.uniform01() * step;
    int idx = 0;
    for (int m = 0; m < count; ++m) {
      while (idx < n - 1 && cum[idx] <= pos) ++idx;
      out[m] = idx;
      pos += step;
    }
  }
  return out;
}

}  // namespace ssm
