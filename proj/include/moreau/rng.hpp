#pragma once

#include <cstdint>
#include <vector>

namespace moreau {

/// SplitMix64 (Steele, Lea, Flood 2014). Every consumer draws from a stream
/// derived as `Rng::stream(seed, stream_id)`, so results do not depend on
/// evaluation order or on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t state) : state_(state) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer on [0, bound); rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller (cached second variate).
  double normal();

  /// `count` distinct indices from [0, n), returned in ascending order.
  std::vector<int> sample_without_replacement(int n, int count);

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// The SplitMix64 finalizer; used to derive seeds for sub-streams.
std::uint64_t mix64(std::uint64_t x);

}  // namespace moreau
