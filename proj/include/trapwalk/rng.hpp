// Deterministic randomness: a SplitMix64 stream generator for path sampling
// and stateless hash-derived uniforms for random-access trap decisions.
// Per-sample streams are derived from (master seed, sample index) so workers
// never need to coordinate.
#pragma once

#include <cstdint>

namespace trapwalk::rng {

inline constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 finalizer, usable as a standalone 64-bit mixer.
constexpr uint64_t mix64(uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a value into a running hash.
constexpr uint64_t hash_combine(uint64_t h, uint64_t v) {
  return mix64(h ^ (v + kGolden + (h << 6) + (h >> 2)));
}

/// Top 53 bits -> uniform double in [0, 1).
constexpr double u01_from_bits(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += kGolden);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double next_u01() { return u01_from_bits(next()); }

  /// Uniform integer in [0, n) via the multiply-shift reduction.
  uint64_t next_below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  uint64_t state_;
};

/// Independent stream for sample `index` under `master_seed`. The salt
/// separates uses (path steps vs. trap realizations) of the same index.
inline SplitMix64 stream_for(uint64_t master_seed, uint64_t index,
                             uint64_t salt = 0) {
  return SplitMix64(mix64(hash_combine(mix64(master_seed ^ salt), index)));
}

/// Stateless Bernoulli(p) draw keyed by an arbitrary 64-bit key.
inline bool bernoulli_from_key(uint64_t key, double p) {
  return u01_from_bits(mix64(key)) < p;
}

}  // namespace trapwalk::rng
