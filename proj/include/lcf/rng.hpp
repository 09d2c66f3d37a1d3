#pragma once

#include <array>
#include <cstdint>

namespace lcf {

/// Philox4x32-10 counter-based generator (pinned as "philox4x32-10/v1" in reports).
/// Pure function of (counter, key): any draw is addressable by absolute index, so
/// sampling is bit-reproducible regardless of how work is partitioned over threads.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Indexed random stream: uniforms and standard normals by absolute index.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  /// Uniform double in (0,1), 53-bit resolution.
  double uniform(std::uint64_t index) const;

  /// Standard normal via Box-Muller on counter-indexed uniforms.
  double normal(std::uint64_t index) const;

  /// Uniform in [lo, hi).
  double uniform(std::uint64_t index, double lo, double hi) const {
    return lo + (hi - lo) * uniform(index);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t blk) const;
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace lcf
