#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <numbers>

namespace squeeze {

// Deterministic splitmix64 stream. Distributions are implemented here rather
// than taken from <random> so that sequences are identical across standard
// libraries and platforms; byte-identical outputs are part of the file
// format contracts.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, cosine branch only; two uniforms per draw, no cached spare.
  double normal(double mean = 0.0, double sigma = 1.0) {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Integer in [0, n). Multiply-shift; n must be > 0.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

// Stable substream derivation: fold words into one seed. Used to give every
// grid row / episode / noise source its own independent stream.
inline std::uint64_t seed_mix(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6A09E667F3BCC909ull;
  for (std::uint64_t w : words) {
    h ^= w + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    Rng r(h);
    h = r.next_u64();
  }
  return h;
}

}  // namespace squeeze
