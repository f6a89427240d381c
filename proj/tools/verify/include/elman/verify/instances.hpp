#pragma once

#include <random>

#include "elman/functionals.hpp"
#include "elman/lattice.hpp"
#include "elman/mixing.hpp"
#include "elman/profiles.hpp"
#include "elman/types.hpp"

namespace elman::verify {

/// Uniform on [a, b).
double uniform(std::mt19937_64& rng, double a = 0.0, double b = 1.0);
/// Log-uniform on [a, b).
double log_uniform(std::mt19937_64& rng, double a, double b);

/// Random PSD matrix: full rank, rank deficient or zero, chosen by `kind` modulo 3.
Matrix random_psd(int n, std::mt19937_64& rng, double scale = 1.0, int kind = 0);

struct MixingShape {
  int degree = 4;
  double max_coefficient = 0.5;
  bool linear_and_quadratic = false;  ///< force xi'(0) > 0 and xi''(0) > 0
};
MixingFunction random_mixing(std::mt19937_64& rng, const MixingShape& shape = {});

struct SphericalShape {
  double coupling = 0.5;
  double field = 0.5;
  MixingShape mixing;
};
SphericalModelSpec random_spherical(int n, std::mt19937_64& rng, const SphericalShape& shape = {});

/// Weights separated by at least `gap`; breakpoints per site sorted in [0, s_max].
TalagrandProfile random_talagrand(int n, int r, std::mt19937_64& rng, double s_max = 0.9, double gap = 0.05);
PanchenkoProfile random_panchenko(int n, int r, std::mt19937_64& rng, double gap = 0.05);

CorrelationFunction random_correlation(std::mt19937_64& rng, int atoms = 2, double scale = 1.0);
/// One-dimensional torus of side L.
EuclideanModelSpec random_euclidean(int L, std::mt19937_64& rng, double beta);

}  // namespace elman::verify
