#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "units.hpp"

namespace cptsense {

namespace detail {

/// splitmix64 finalizer; good avalanche, cheap, and stable across platforms.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Deterministically derives an independent stream seed from a master seed, a
/// stream index (run number, sweep point, ...) and a purpose tag ("bath",
/// "counts", ...).  Same inputs give the same seed on every platform; any
/// change to an input decorrelates the output.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::string_view purpose) {
  std::uint64_t h = detail::splitmix64(master ^ detail::fnv1a64(purpose));
  return detail::splitmix64(h ^ detail::splitmix64(index));
}

/// One independent random stream.  mt19937_64 supplies the raw 64-bit words;
/// the variate transforms are written out here (rather than using the
/// std::*_distribution adaptors) so that stream contents are identical across
/// standard library implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return (eng_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (no cached second variate, so draw order
  /// is one-to-one with engine output).
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1], keeps log() finite
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  /// Poisson variate by Knuth's product-of-uniforms method.  Exact additivity
  /// Poisson(a + b) = Poisson(a) + Poisson(b) keeps the large-mean splitting
  /// unbiased while bounding the expected uniform draws per call.
  std::uint64_t poisson(double mean) {
    std::uint64_t total = 0;
    while (mean > 30.0) {
      total += poisson_knuth(30.0);
      mean -= 30.0;
    }
    return total + poisson_knuth(mean);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  std::uint64_t raw() { return eng_(); }

 private:
  std::uint64_t poisson_knuth(double mean) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  std::mt19937_64 eng_;
};

}  // namespace cptsense
