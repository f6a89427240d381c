#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "checks.hpp"
#include "elman/kdual.hpp"
#include "elman/lattice.hpp"
#include "elman/verify/instances.hpp"

namespace elman::verify::detail {

namespace {

std::string label(int i, int n) { return "instance " + std::to_string(i) + " (n=" + std::to_string(n) + ")"; }

Vector random_u(int n, std::mt19937_64& rng, double lo, double hi) {
  Vector u(n);
  for (int x = 0; x < n; ++x) u(x) = log_uniform(rng, lo, hi);
  return u;
}

}  // namespace

std::vector<CriterionResult> check_duality_residual(const Context& ctx) {
  Tally t = ctx.tally("AC-1");
  for (int i = 0; i < 200; ++i) {
    auto rng = ctx.rng(1, i);
    const int n = 1 + i % 6;
    const Matrix D = random_psd(n, rng, log_uniform(rng, 0.1, 10.0), i / 6);
    const Vector u = random_u(n, rng, 0.05, 20.0);
    try {
      const DualPoint p = solve_K(D, u);
      Matrix M = D;
      M.diagonal() += p.K;
      t.add((inverse_diagonal(M) - u).cwiseAbs().maxCoeff(), label(i, n));
    } catch (const std::exception& e) {
      t.error(label(i, n), e.what());
    }
  }
  return {t.result()};
}

std::vector<CriterionResult> check_gradient_identity(const Context& ctx) {
  Tally t = ctx.tally("AC-2");
  for (int i = 0; i < 50; ++i) {
    auto rng = ctx.rng(2, i);
    const int n = 1 + i % 6;
    const Matrix D = random_psd(n, rng, log_uniform(rng, 0.1, 5.0), i / 6);
    const Vector u = random_u(n, rng, 0.1, 5.0);
    try {
      const Vector K = solve_K(D, u).K;
      Vector fd(n);
      for (int x = 0; x < n; ++x) {
        const double h = 1e-4 * u(x);
        Vector up = u, um = u;
        up(x) += h;
        um(x) -= h;
        fd(x) = n * (lambda(D, up) - lambda(D, um)) / (2.0 * h);
      }
      t.add((fd - K).cwiseAbs().maxCoeff() / K.cwiseAbs().maxCoeff(), label(i, n));
    } catch (const std::exception& e) {
      t.error(label(i, n), e.what());
    }
  }
  return {t.result()};
}

std::vector<CriterionResult> check_jacobian_identity(const Context& ctx) {
  Tally t = ctx.tally("AC-3");
  KSolveOptions tight;
  tight.tol = 1e-13;
  for (int i = 0; i < 50; ++i) {
    auto rng = ctx.rng(3, i);
    const int n = 1 + i % 6;
    const Matrix D = random_psd(n, rng, log_uniform(rng, 0.1, 5.0), i / 6);
    const Vector u = random_u(n, rng, 0.1, 5.0);
    try {
      const DualPoint p = solve_K(D, u, tight);
      const Matrix J = grad_K(D, p);
      Matrix fd(n, n);
      for (int y = 0; y < n; ++y) {
        const double h = 1e-5 * u(y);
        Vector up = u, um = u;
        up(y) += h;
        um(y) -= h;
        fd.col(y) = (solve_K(D, up, tight).K - solve_K(D, um, tight).K) / (2.0 * h);
      }
      const double scale = J.cwiseAbs().maxCoeff();
      const double err = (fd - J).cwiseAbs().maxCoeff() / scale;
      const double asym = (J - J.transpose()).cwiseAbs().maxCoeff() / scale;
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (J + J.transpose()));
      if (!(eig.eigenvalues().maxCoeff() < 0.0)) {
        t.error(label(i, n), "Jacobian is not negative definite");
        continue;
      }
      t.add(std::max(err, asym), label(i, n));
    } catch (const std::exception& e) {
      t.error(label(i, n), e.what());
    }
  }
  return {t.result()};
}

std::vector<CriterionResult> check_closed_forms(const Context& ctx) {
  Tally t = ctx.tally("AC-4");
  for (int i = 0; i < 20; ++i) {
    auto rng = ctx.rng(4, i);
    const int n = 1 + i % 6;
    const Vector u = random_u(n, rng, 0.05, 20.0);
    try {
      // D = 0: K = 1/u and Lambda = mean(1 + log u).
      const DualPoint p = solve_K(Matrix::Zero(n, n), u);
      const Vector K = u.cwiseInverse();
      const double lam = (1.0 + u.array().log()).mean();
      double err = ((p.K - K).array().abs() / K.array().abs().max(1.0)).maxCoeff();
      err = std::max(err, std::abs(lambda(Matrix::Zero(n, n), p) - lam) / std::max(1.0, std::abs(lam)));
      t.add(err, "zero coupling " + label(i, n));

      // One site: K = 1/u - d and Lambda = 1 - d u + log u.
      const double d = uniform(rng, 0.0, 5.0);
      const double v = u(0);
      const Matrix D1 = Matrix::Constant(1, 1, d);
      const DualPoint q = solve_K(D1, Vector::Constant(1, v));
      const double k1 = 1.0 / v - d, l1 = 1.0 - d * v + std::log(v);
      double e1 = std::abs(q.K(0) - k1) / std::max(1.0, std::abs(k1));
      e1 = std::max(e1, std::abs(lambda(D1, q) - l1) / std::max(1.0, std::abs(l1)));
      t.add(e1, "one site " + std::to_string(i));
    } catch (const std::exception& e) {
      t.error(label(i, n), e.what());
    }
  }
  return {t.result()};
}

std::vector<CriterionResult> check_boundary_epsilon(const Context& ctx) {
  Tally t = ctx.tally("AC-16");
  for (int i = 0; i < 10; ++i) {
    auto rng = ctx.rng(16, i);
    const int n = 2 + i % 4;
    const Matrix D = random_psd(n, rng, log_uniform(rng, 0.1, 5.0), i);
    try {
      const BoundaryReport rep = boundary_diagnostics(D, 10.0, 200, ctx.options.seed + i);
      t.add(rep.epsilon, label(i, n));
    } catch (const std::exception& e) {
      t.error(label(i, n), e.what());
    }
  }
  return {t.result()};
}

}  // namespace elman::verify::detail
