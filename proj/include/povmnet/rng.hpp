#pragma once

// Seedable xoshiro256** generator with a fixed stream-splitting rule.
//
// Every random quantity in the project is drawn from a Rng whose seed is
// derive_seed(base, i, j, ...): the base seed is mixed with each index in
// turn through splitmix64. Datasets use (base, record, batch), ensemble
// members use (base, member), training shuffles use (seed, epoch). The
// distributions below are implemented here rather than taken from <random>
// so that streams are identical across standard libraries.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace povmnet {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> indices) {
  std::uint64_t s = base;
  std::uint64_t out = splitmix64(s);
  for (auto idx : indices) {
    std::uint64_t t = out ^ (idx * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    out = splitmix64(t);
  }
  return out;
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), unbiased (Lemire's method).
  std::uint64_t below(std::uint64_t n) {
    __uint128_t m = static_cast<__uint128_t>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<__uint128_t>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller (no cached second value).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Exact Binomial(n, p) draw.
  std::uint64_t binomial(std::uint64_t n, double p);

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> state_{};
};

inline std::uint64_t Rng::binomial(std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  // Geometric waiting-time method; expected cost O(n * min(p, 1-p)).
  const bool flip = p > 0.5;
  const double q = flip ? 1.0 - p : p;
  const double log_q = std::log1p(-q);
  std::uint64_t count = 0;
  std::uint64_t pos = 0;
  while (true) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    const double gap = std::floor(std::log(u) / log_q);
    if (gap >= static_cast<double>(n - pos)) break;
    pos += static_cast<std::uint64_t>(gap) + 1;
    ++count;
    if (pos >= n) break;
  }
  return flip ? n - count : count;
}

}  // namespace povmnet
