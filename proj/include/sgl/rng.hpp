#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sgl {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of realization `index` in an ensemble with base seed `base`.
constexpr std::uint64_t realization_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base + kGolden * (index + 1));
}

/// Counter-based stream: the value at `counter` depends only on (key, counter).
constexpr std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter) {
  return splitmix64(key ^ splitmix64(counter));
}

/// Uniform in (0, 1].
inline double to_unit(std::uint64_t h) {
  return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
}

/// Standard normal at position `index` of the stream `key` (Box-Muller, cosine branch).
inline double stream_normal(std::uint64_t key, std::uint64_t index) {
  const double u1 = to_unit(counter_hash(key, 2 * index));
  const double u2 = to_unit(counter_hash(key, 2 * index + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Small sequential generator for test data and sampling.
class SplitMix {
public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += kGolden;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return to_unit(next()); }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::uint64_t state_;
};

}  // namespace sgl
