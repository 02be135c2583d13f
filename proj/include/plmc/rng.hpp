#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace plmc {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key);
};

// Independent sub-streams for Gaussian increments and index-set selection, so
// that changing K does not shift the Gaussian draws of a chain.
enum class RngLane : std::uint32_t { gaussian = 0, selection = 1, auxiliary = 2 };

// Deterministic stream addressed by (seed, stream_id). Copies continue
// identically, which the K=1 degeneracy tests rely on.
class RngStream {
 public:
  RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform(RngLane lane);
  double normal();
  void fill_normal(std::span<double> out);

  bool operator==(const RngStream&) const = default;

 private:
  struct LaneState {
    std::uint64_t block = 0;
    std::array<std::uint32_t, 4> words{};
    int used = 4;
    bool operator==(const LaneState&) const = default;
  };

  std::uint32_t next_word(RngLane lane);

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<LaneState, 3> lanes_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace plmc
