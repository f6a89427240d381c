#pragma once

#include <cmath>
#include <random>

#include <doctest.h>

#include "elman/types.hpp"

namespace elman::test {

/// |a - b| < tol, with both values in the failure message.
#define CHECK_NEAR(a, b, tol)                                            \
  do {                                                                   \
    const double elman_a_ = (a), elman_b_ = (b);                         \
    INFO(#a " = " << elman_a_ << ", " #b " = " << elman_b_);             \
    CHECK(std::abs(elman_a_ - elman_b_) < (tol));                        \
  } while (0)

inline Matrix random_pd(int n, std::mt19937_64& rng, double shift = 0.5) {
  std::normal_distribution<double> g;
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  return A * A.transpose() / n + shift * Matrix::Identity(n, n);
}

inline Matrix random_psd(int n, std::mt19937_64& rng) { return random_pd(n, rng, 0.0); }

}  // namespace elman::test
