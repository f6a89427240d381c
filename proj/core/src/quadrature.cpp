#include "elman/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "elman/error.hpp"

namespace elman::quad {
namespace {

// Golub-Welsch: nodes are eigenvalues of the symmetric Jacobi matrix of the
// orthogonal polynomial family, weights are mu0 times squared first components.
Rule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
  const auto n = offdiag.size() + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = offdiag(i);
    jacobi(i + 1, i) = offdiag(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = eig.eigenvalues()(i);
    const double v = eig.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v * v;
  }
  return rule;
}

// Newton polish of Legendre nodes; Golub-Welsch weights lose relative accuracy near the ends.
void polish_legendre(Rule& rule) {
  const int n = static_cast<int>(rule.nodes.size());
  for (int i = 0; i < n; ++i) {
    double x = rule.nodes[i];
    double dp = 0.0;
    for (int it = 0; it < 4; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      x -= p1 / dp;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

template <class Build>
const Rule& cached(std::map<int, Rule>& cache, std::mutex& mu, int n, Build&& build) {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "quadrature order must be positive");
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}

}  // namespace

const Rule& gauss_legendre(int n) {
  static std::map<int, Rule> cache;
  static std::mutex mu;
  return cached(cache, mu, n, [](int m) {
    Eigen::VectorXd off(m - 1);
    for (int k = 1; k < m; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
    Rule rule = golub_welsch(off, 2.0);
    if (m > 1) polish_legendre(rule);
    return rule;
  });
}

const Rule& gauss_hermite_normal(int n) {
  static std::map<int, Rule> cache;
  static std::mutex mu;
  return cached(cache, mu, n, [](int m) {
    // Probabilists' Hermite recurrence: off-diagonal sqrt(k).
    Eigen::VectorXd off(m - 1);
    for (int k = 1; k < m; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
    return golub_welsch(off, 1.0);
  });
}

}  // namespace elman::quad
