#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace pointseg {

// Deterministic PRNG: xoshiro256++ seeded through splitmix64.
//
// std::mt19937 would do, but the standard distributions
// (uniform_int_distribution, normal_distribution) are not required to
// produce identical sequences across standard library implementations.
// Reproducibility down to the byte is a hard requirement here, so both
// the engine and the distributions are spelled out.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  // Derives an independent stream for a tagged purpose (weights, data
  // order, noise, ...) so adding a consumer does not shift the others.
  static Rng stream(uint64_t seed, uint64_t tag) {
    return Rng(seed ^ (0x9E3779B97F4A7C15ULL * (tag + 1)));
  }

  uint64_t next() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform in [0, n), unbiased via rejection. n must be positive.
  int uniform_int(int n) {
    const auto un = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  // Box-Muller transform; one fresh pair per call, second value discarded
  // to keep the consumed-sample count independent of call history.
  double normal(double mu = 0.0, double sigma = 1.0) {
    const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mu + sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::array<uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<uint64_t, 4>& s) { state_ = s; }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::array<uint64_t, 4> state_{};
};

}  // namespace pointseg
