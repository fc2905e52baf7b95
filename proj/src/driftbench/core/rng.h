#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>

namespace driftbench {

/// Deterministic 64-bit RNG (splitmix64). One u64 of state, so snapshots are
/// trivially serializable and the stream is identical on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller. No cached spare: two uniforms are drawn
  /// per call so the stream position is a pure function of the call count.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

 private:
  uint64_t state_;
};

/// Derives an independent stream seed from a base seed and a list of tags
/// (phase index, pair index, resample index, ...).
uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> tags);
uint64_t derive_seed(uint64_t base, const std::string& tag);

}  // namespace driftbench
