#include "elman/verify/instances.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace elman::verify {

double uniform(std::mt19937_64& rng, double a, double b) {
  return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double log_uniform(std::mt19937_64& rng, double a, double b) {
  return std::exp(uniform(rng, std::log(a), std::log(b)));
}

Matrix random_psd(int n, std::mt19937_64& rng, double scale, int kind) {
  switch (kind % 3) {
    case 1: {
      const int rank = std::max(1, n / 2);
      Matrix B(n, rank);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < rank; ++j) B(i, j) = uniform(rng, -1.0, 1.0);
      Matrix D = scale * B * B.transpose() / rank;
      return 0.5 * (D + D.transpose());
    }
    case 2:
      return Matrix::Zero(n, n);
    default: {
      Matrix A(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = uniform(rng, -1.0, 1.0);
      Matrix D = scale * A * A.transpose() / n;
      return 0.5 * (D + D.transpose());
    }
  }
}

MixingFunction random_mixing(std::mt19937_64& rng, const MixingShape& shape) {
  MixingFunction xi;
  xi.coeffs.assign(shape.degree + 1, 0.0);
  for (int p = 1; p <= shape.degree; ++p) {
    const bool forced = shape.linear_and_quadratic && p <= 2;
    if (forced || uniform(rng) < 0.7) xi.coeffs[p] = uniform(rng, forced ? 0.2 : 0.0, 1.0) * shape.max_coefficient;
  }
  if (xi.is_zero()) xi.coeffs[std::min(2, shape.degree)] = 0.5 * shape.max_coefficient;
  return xi;
}

SphericalModelSpec random_spherical(int n, std::mt19937_64& rng, const SphericalShape& shape) {
  SphericalModelSpec spec;
  spec.D = random_psd(n, rng, shape.coupling, 0);
  spec.h = Vector(n);
  for (int x = 0; x < n; ++x) spec.h(x) = uniform(rng, -shape.field, shape.field);
  for (int x = 0; x < n; ++x) spec.xi.push_back(random_mixing(rng, shape.mixing));
  return spec;
}

namespace {

// Sorted draws in (lo, hi) with consecutive gaps of at least `gap` (gap shrinks if infeasible).
std::vector<double> separated(int count, double lo, double hi, double gap, std::mt19937_64& rng) {
  gap = std::min(gap, (hi - lo) / (count + 1));
  const double room = (hi - lo) - gap * (count + 1);
  std::vector<double> u(count);
  for (double& v : u) v = uniform(rng, 0.0, room);
  std::sort(u.begin(), u.end());
  for (int i = 0; i < count; ++i) u[i] += lo + gap * (i + 1);
  return u;
}

}  // namespace

TalagrandProfile random_talagrand(int n, int r, std::mt19937_64& rng, double s_max, double gap) {
  TalagrandProfile p;
  p.m.push_back(0.0);
  for (double v : separated(r - 1, 0.0, 1.0, gap, rng)) p.m.push_back(v);
  p.m.push_back(1.0);
  p.s.resize(n, r);
  for (int x = 0; x < n; ++x) {
    std::vector<double> v(r);
    for (double& e : v) e = uniform(rng, 0.0, s_max);
    std::sort(v.begin(), v.end());
    for (int k = 0; k < r; ++k) p.s(x, k) = v[k];
  }
  return p;
}

PanchenkoProfile random_panchenko(int n, int r, std::mt19937_64& rng, double gap) {
  PanchenkoProfile p;
  for (double v : separated(r, 0.0, 1.0, gap, rng)) p.t.push_back(v);
  p.t.push_back(1.0);
  p.q.resize(n, r - 1);
  for (int x = 0; x < n; ++x) {
    std::vector<double> v(r - 1);
    for (double& e : v) e = uniform(rng, 0.0, 1.0);
    std::sort(v.begin(), v.end());
    for (int k = 0; k + 1 < r; ++k) p.q(x, k) = v[k];
  }
  return p;
}

CorrelationFunction random_correlation(std::mt19937_64& rng, int atoms, double scale) {
  CorrelationFunction B;
  B.c0 = uniform(rng, 0.0, 0.3) * scale;
  for (int i = 0; i < atoms; ++i) B.atoms.emplace_back(uniform(rng, 0.2, 1.0) * scale, uniform(rng, 0.3, 1.2));
  return B;
}

EuclideanModelSpec random_euclidean(int L, std::mt19937_64& rng, double beta) {
  EuclideanModelSpec spec;
  spec.lattice.L = L;
  spec.lattice.d = 1;
  spec.lattice.mu = uniform(rng, 0.5, 2.0);
  spec.lattice.t = uniform(rng, 0.1, 1.0);
  spec.B = random_correlation(rng);
  spec.h = uniform(rng, -0.5, 0.5);
  spec.beta = beta;
  return spec;
}

}  // namespace elman::verify
