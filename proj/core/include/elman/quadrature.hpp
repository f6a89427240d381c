#pragma once

#include <vector>

namespace elman::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 2n-1.
const Rule& gauss_legendre(int n);

/// Gauss-Hermite rule for the standard normal weight: sum w_i f(x_i) ~ E f(Z), Z ~ N(0,1).
const Rule& gauss_hermite_normal(int n);

/// Integral of f over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
double integrate(F&& f, double a, double b, int n) {
  const Rule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * acc;
}

}  // namespace elman::quad
