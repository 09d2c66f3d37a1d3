#include "lcf/rng.hpp"

#include <cmath>

namespace lcf {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = std::uint64_t(a) * std::uint64_t(b);
  hi = std::uint32_t(p >> 32);
  lo = std::uint32_t(p);
}

inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t(hi) << 32) | lo;
  // 53 significant bits, strictly inside (0,1).
  return double(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::array<std::uint32_t, 4> RandomStream::block(std::uint64_t blk) const {
  const std::array<std::uint32_t, 4> counter{
      std::uint32_t(blk), std::uint32_t(blk >> 32), std::uint32_t(stream_),
      std::uint32_t(stream_ >> 32)};
  const std::array<std::uint32_t, 2> key{std::uint32_t(seed_), std::uint32_t(seed_ >> 32)};
  return philox4x32(counter, key);
}

double RandomStream::uniform(std::uint64_t index) const {
  const auto r = block(index);
  return to_unit_open(r[0], r[1]);
}

double RandomStream::normal(std::uint64_t index) const {
  const auto r = block(index >> 1);
  const double u1 = to_unit_open(r[0], r[1]);
  const double u2 = to_unit_open(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * M_PI * u2;
  return (index & 1) ? rad * std::sin(ang) : rad * std::cos(ang);
}

}  // namespace lcf
