#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ssm {

// Counter-based random stream. A stream is identified by (seed, stream_id);
// output block j is a pure function of (seed, stream_id, j), so streams are
// value types: copying one replays it, and two streams with equal identity
// produce identical sequences no matter where or when they are consumed.
//
// split() derives a child identity from (stream_id, tag) without touching the
// parent, which lets samplers key their randomness on logical indices
// (particle, time, purpose) instead of execution order.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), id_(stream_id) {}

  // Child stream deterministic in (seed, stream_id, child_tag) only.
  RngStream split(std::uint64_t child_tag) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return id_; }

  std::uint64_t next_u64();
  double uniform01();  // [0, 1)
  double normal();     // standard normal
  double exponential(double rate);
  double gamma(double shape, double rate);
  long poisson(double mean);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t id_;
  std::uint64_t counter_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int buf_pos_ = 2;
};

enum class ResampleScheme { kMultinomial, kSystematic };

// Draws `count` ancestor indices in [0, weights.size()) from normalized
// weights. Multinomial draws are i.i.d. categorical; systematic places one
// stratified point per draw so the expected copy count of index n is
// count * W[n] with integer parts hit exactly.
std::vector<int> resample_indices(std::span<const double> weights, int count,
                                  ResampleScheme scheme, RngStream& rng);

}  // namespace ssm
