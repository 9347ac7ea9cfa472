#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "phaseforge/numerics/complex_vector.hpp"

namespace phaseforge {

struct RngSeed {
  std::uint64_t value = 0;

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

namespace detail {
// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Child seed for a stream identified by `keys`, e.g. derive_seed(base, {n, m, trial}).
/// Pure function of its inputs, so any number of workers can derive their
/// streams without coordination.
constexpr RngSeed derive_seed(RngSeed base, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = detail::mix64(base.value);
  for (std::uint64_t k : keys) h = detail::mix64(h ^ detail::mix64(k + 0x632be59bd9b4e019ULL));
  return RngSeed{h};
}

using Engine = std::mt19937_64;

inline Engine make_engine(RngSeed seed) { return Engine{seed.value}; }

/// Draws N(0, 1/2) + i N(0, 1/2), so that E|z|^2 = 1.
class ComplexGaussian {
 public:
  Complex operator()(Engine& engine) {
    const double re = dist_(engine);
    const double im = dist_(engine);
    return {re, im};
  }

 private:
  std::normal_distribution<double> dist_{0.0, std::sqrt(0.5)};
};

inline ComplexVector sample_complex_gaussian(std::size_t n, Engine& engine) {
  ComplexGaussian gauss;
  ComplexVector out(n);
  for (auto& z : out) z = gauss(engine);
  return out;
}

}  // namespace phaseforge
