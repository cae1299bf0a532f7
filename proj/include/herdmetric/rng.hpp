#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace herdmetric {

// SplitMix64 finalizer. Also used as the seed-combining hash so that derived
// streams (per identity, per split, per repetition) are portable across
// implementations of this toolkit.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Order-sensitive combine: h' = mix(h + GOLDEN_GAMMA + x).
inline std::uint64_t seed_mix(std::uint64_t h, std::uint64_t x) {
  return splitmix64_mix(h + 0x9E3779B97F4A7C15ULL + x);
}
template <typename... Rest>
std::uint64_t seed_mix(std::uint64_t h, std::uint64_t x, Rest... rest) {
  return seed_mix(seed_mix(h, x), rest...);
}

// Counter-based SplitMix64 generator. The full stream is specified here so
// draws are reproducible bit-for-bit on any platform:
//   next_u64:     state += 0x9E3779B97F4A7C15; return mix(state)
//   uniform:      next_u64 >> 11, scaled by 2^-53              -> [0, 1)
//   uniform_int:  rejection sampling on next_u64, then modulo  -> [0, n)
//   normal:       Box-Muller, z = sqrt(-2 ln(1-u1)) cos(2 pi u2),
//                 two uniform draws per call, no caching
//   shuffle:      Fisher-Yates from the back, j = uniform_int(i+1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return splitmix64_mix(state_);
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t bound = n == 0 ? 0 : (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x = next_u64();
    while (x >= bound) x = next_u64();
    return x % n;
  }

  double normal(double mean = 0.0, double sigma = 1.0) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(1.0 - u1)) *
                     std::cos(2.0 * 3.14159265358979323846 * u2);
    return mean + sigma * z;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Deterministic child stream keyed by one or more tags.
  template <typename... Tags>
  Rng child(Tags... tags) const {
    return Rng(seed_mix(state_, static_cast<std::uint64_t>(tags)...));
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace herdmetric
