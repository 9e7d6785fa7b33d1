#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace regime {

// SplitMix64: counter-based generator (Steele/Lea/Flood mixing function over
// an additive counter). One mix per draw; trivially splittable by hashing a
// stream index into the seed, which is how per-path/per-history generators
// are derived.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Seed for stream `stream` of a run keyed by `seed`. Mixing both through
// SplitMix64 keeps distinct (seed, stream) pairs decorrelated.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0x632be59bd9b4e019ULL + stream * 0x9e3779b97f4a7c15ULL));
  g.next();
  return g.next();
}

// Random draws used throughout simulation. All variates are produced from
// raw 64-bit words by explicit formulas, so results are identical across
// platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on the open interval (0, 1); never returns an endpoint.
  double uniform01() {
    return (static_cast<double>(gen_.next() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (cosine branch only, stateless).
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Exponential with unit mean.
  double exponential() { return -std::log(uniform01()); }

  // Index drawn from an (unnormalized, nonnegative) weight vector.
  int discrete(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01() * total;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
      u -= weights[k];
      if (u <= 0.0) return static_cast<int>(k);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  std::uint64_t next_word() { return gen_.next(); }

 private:
  SplitMix64 gen_;
};

}  // namespace regime
