#pragma once

#include <cstdint>
#include <random>

namespace qdag {

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Derives a stream seed from a base seed and up to three stream indices.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Thin wrapper over a 64-bit Mersenne twister with the draws the samplers need.
/// Gamma and inverse-gamma use shape-rate parameterization throughout.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
  }
  /// IG(shape, rate): density proportional to x^{-shape-1} exp(-rate / x).
  double inv_gamma(double shape, double rate) { return 1.0 / gamma(shape, rate); }
  double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }
  bool bernoulli(double prob) { return uniform() < prob; }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
};

}  // namespace qdag
