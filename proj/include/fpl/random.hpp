#pragma once

#include <cstdint>
#include <random>

#include "fpl/common.hpp"

namespace fpl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

/// Independent generator for sample `index` under `seed`. Results depend only on
/// (seed, index), never on evaluation order.
inline Rng stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0xA5A5A5A5ULL)));
}

/// Standard complex Gaussian: real and imaginary parts N(0, 1/2).
inline Complex complex_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 0.70710678118654752440);
  double re = n(rng);
  double im = n(rng);
  return {re, im};
}

inline CMatrix complex_gaussian(int rows, int cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = complex_normal(rng);
  return m;
}

/// Random Hermitian matrix with GUE-type entries.
inline CMatrix random_hermitian(int n, Rng& rng) {
  CMatrix g = complex_gaussian(n, n, rng);
  return 0.5 * (g + g.adjoint());
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace fpl
