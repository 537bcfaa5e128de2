#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace churn {

// Seed expansion step of SplitMix64. Also used to derive independent
// per-stream seeds (per tree, per player) from one master seed.
std::uint64_t splitmix64(std::uint64_t& state);

// Seed for sub-stream `stream` of `master`. Order-independent: the result
// depends only on the two arguments.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// xoshiro256** generator with hand-written distributions.
//
// Every randomized procedure in the project draws from this class. The
// engine and all transforms are specified here, so a given seed produces the
// same sequence on every platform and standard library (the distributions in
// <random> are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, n). n must be > 0. Unbiased (rejection).
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Exponential with the given rate (mean 1/rate) by inversion.
  double exponential(double rate);

  // Poisson by multiplication of uniforms for small means and a normal
  // approximation (rounded, clamped at zero) above 60.
  std::uint32_t poisson(double mean);

  // Standard normal, Box-Muller (one value per call, no caching).
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace churn
