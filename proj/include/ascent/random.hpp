#pragma once

// Portable random variates. std::mt19937_64 is bit-exact across standard
// libraries, the std::*_distribution adaptors are not, so every transform
// used for reproducible output is written out here.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace ascent {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(base ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform in (0, 1); safe as a log argument.
inline double uniform_open01(Engine& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection (no modulo bias).
inline std::size_t uniform_index(Engine& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

/// Box-Muller pair of independent standard normals.
inline std::pair<double, double> standard_normal_pair(Engine& rng) {
  const double u1 = uniform_open01(rng);
  const double u2 = uniform01(rng);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Standard normal stream that keeps the second Box-Muller variate.
class NormalSource {
 public:
  explicit NormalSource(Engine& rng) : rng_(rng) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    auto [a, b] = standard_normal_pair(rng_);
    spare_ = b;
    has_spare_ = true;
    return a;
  }

 private:
  Engine& rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Laplace(0, scale) by inverse CDF.
inline double laplace(Engine& rng, double scale) {
  const double u = uniform_open01(rng) - 0.5;
  const double mag = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -mag : mag;
}

/// Fisher-Yates shuffle with a portable index draw.
template <class T>
void shuffle(std::span<T> items, Engine& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace ascent
