#include "plmc/rng.hpp"

#include <cmath>
#include <numbers>

namespace plmc {

namespace {

constexpr std::uint32_t kMulA = 0xD2511F53;
constexpr std::uint32_t kMulB = 0xCD9E8D57;
constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMulA, ctr[0], lo0, hi0);
    mulhilo(kMulB, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

std::uint32_t RngStream::next_word(RngLane lane) {
  const auto li = static_cast<std::uint32_t>(lane);
  LaneState& s = lanes_[li];
  if (s.used == 4) {
    // 48-bit block counter, lane tag in the upper half of word 1.
    const Philox4x32::Counter ctr = {
        static_cast<std::uint32_t>(s.block),
        static_cast<std::uint32_t>((s.block >> 32) & 0xffffu) | (li << 16),
        static_cast<std::uint32_t>(stream_id_),
        static_cast<std::uint32_t>(stream_id_ >> 32)};
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed_),
                                 static_cast<std::uint32_t>(seed_ >> 32)};
    s.words = Philox4x32::generate(ctr, key);
    ++s.block;
    s.used = 0;
  }
  return s.words[s.used++];
}

double RngStream::uniform(RngLane lane) {
  const std::uint64_t hi = next_word(lane);
  const std::uint64_t lo = next_word(lane);
  const std::uint64_t bits = ((hi << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform(RngLane::gaussian);
  const double u2 = uniform(RngLane::gaussian);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

void RngStream::fill_normal(std::span<double> out) {
  for (double& x : out) x = normal();
}

}  // namespace plmc
