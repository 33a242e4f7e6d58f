#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace hsicnn {

// SplitMix64 (Steele, Lea, Flood 2014). Used to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent random streams derived from one user seed. Stream ids are
// fixed so every consumer of randomness is reproducible in isolation.
enum class Stream : std::uint64_t {
  split = 1,
  init = 2,
  shuffle = 3,
  dropout = 4,
  synthetic = 5,
  sampling = 6,
};

// xoshiro256** 1.0 (Blackman, Vigna). State seeded from SplitMix64 so that
// every platform produces the same sequence for the same seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  Rng(std::uint64_t seed, Stream stream)
      : Rng(seed + static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL) {}

  // Stream for one work item (e.g. one sample of one step) so that the draws
  // do not depend on execution order.
  Rng(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b) {
    std::uint64_t mix = seed + static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL;
    mix ^= splitmix64(a) + 0x632BE59BD9B4E019ULL;
    mix ^= splitmix64(b) * 0x9E3779B97F4A7C15ULL;
    reseed(mix);
  }

  void reseed(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) by Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Standard normal via Box-Muller (no cached second value).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename Container>
  void shuffle(Container& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace hsicnn
