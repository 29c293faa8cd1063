#pragma once

#include <cstdint>
#include <vector>

namespace pdcp {

// Counter-based generator (SplitMix64 as a PRF over key + counter).
// Identical seed gives identical draws on every platform, and independent
// streams can be forked without perturbing each other: dataset generation,
// diffusion noising and cross-prediction coin flips each own a stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)), counter_(0) {}

  // Independent stream derived from this one's key; does not advance state.
  Rng fork(std::uint64_t stream_id) const {
    Rng r(0);
    r.key_ = mix(key_ ^ mix(stream_id + 0x632be59bd9b4e019ull));
    r.counter_ = 0;
    return r;
  }

  std::uint64_t next_u64() { return mix(key_ + ++counter_ * 0x9e3779b97f4a7c15ull); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller on two uniforms; u1 shifted into (0, 1] so log is finite.
  double normal();

  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  std::vector<double> uniform_vec(std::size_t n);
  std::vector<double> normal_vec(std::size_t n);

  std::uint64_t state_counter() const { return counter_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

// Stream ids used across the repo so independent consumers never collide.
namespace streams {
inline constexpr std::uint64_t kInit = 1;        // parameter initialization
inline constexpr std::uint64_t kNoise = 2;       // diffusion epsilon draws
inline constexpr std::uint64_t kStep = 3;        // diffusion step index draws
inline constexpr std::uint64_t kCrossPred = 4;   // cross-prediction coin
inline constexpr std::uint64_t kShuffle = 5;     // batch composition
inline constexpr std::uint64_t kKMeans = 6;      // prototype refits
inline constexpr std::uint64_t kWorld = 7;       // env resets / expert jitter
inline constexpr std::uint64_t kSample = 8;      // policy reverse process
inline constexpr std::uint64_t kDropout = 9;
}  // namespace streams

}  // namespace pdcp
