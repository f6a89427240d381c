#include "elman/kdual.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "elman/error.hpp"
#include "elman/lattice.hpp"
#include "elman/random.hpp"

namespace elman {
namespace {

struct Eval {
  bool ok = false;
  double potential = 0.0;  // log det(D+K) - <K,u>
  Matrix G;
  double residual = 0.0;
};

Eval evaluate(const Matrix& D, const Vector& u, const Vector& K) {
  Eval e;
  Matrix M = D;
  M.diagonal() += K;
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all()) return e;
  e.ok = true;
  e.potential = 2.0 * llt.matrixLLT().diagonal().array().log().sum() - K.dot(u);
  e.G = llt.solve(Matrix::Identity(D.rows(), D.cols()));
  e.residual = (e.G.diagonal() - u).cwiseAbs().maxCoeff();
  return e;
}

}  // namespace

DualPoint solve_K(const Matrix& D, const Vector& u, const KSolveOptions& opt) {
  const auto n = D.rows();
  if (D.cols() != n || u.size() != n || n == 0) throw Error(ErrorKind::InvalidInput, "solve_K: dimension mismatch");
  if (!u.allFinite() || (u.array() <= 0.0).any()) throw Error(ErrorKind::InvalidInput, "solve_K: u must be strictly positive");

  Vector K = u.cwiseInverse() - D.diagonal();
  {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(D + Matrix(K.asDiagonal()), Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin < 1e-8) K.array() += 1e-8 - lmin;
  }
  Eval cur = evaluate(D, u, K);

  if (u.maxCoeff() > opt.guard_high || u.minCoeff() < opt.guard_low)
  {
    char range[96];
    std::snprintf(range, sizeof range, "[%g, %g]", opt.guard_low, opt.guard_high);
    throw Error(ErrorKind::NoConvergence, std::string("solve_K: u outside the solver domain ") + range,
                cur.ok ? cur.residual : std::numeric_limits<double>::infinity());
  }
  if (!cur.ok) throw Error(ErrorKind::NotPositiveDefinite, "solve_K: projected start left the domain");

  int it = 0;
  for (; it < opt.max_iterations && cur.residual > opt.tol; ++it) {
    // Newton step for grad = diag(G) - u with Hessian -(G o G).
    const Matrix H = cur.G.cwiseProduct(cur.G);
    const Vector step = H.llt().solve(cur.G.diagonal() - u);
    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, alpha *= 0.5) {
      Eval trial = evaluate(D, u, K + alpha * step);
      if (!trial.ok) continue;
      // Ascent on the concave potential; near the solution the potential is flat
      // to roundoff, so a strict residual decrease is also accepted.
      if (trial.potential >= cur.potential - 1e-14 * std::abs(cur.potential) || trial.residual < cur.residual) {
        K += alpha * step;
        cur = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  // One full step past tol takes a converged point to roundoff (quadratic convergence).
  if (cur.residual <= opt.tol && cur.residual > 0.0) {
    const Vector step = cur.G.cwiseProduct(cur.G).llt().solve(cur.G.diagonal() - u);
    Eval trial = evaluate(D, u, K + step);
    if (trial.ok && trial.residual < cur.residual) {
      K += step;
      cur = std::move(trial);
    }
  }
  if (cur.residual > opt.tol)
    throw Error(ErrorKind::NoConvergence, "solve_K: residual above tolerance after " + std::to_string(it) + " steps",
                cur.residual);

  DualPoint p;
  p.u = u;
  p.K = K;
  p.resolvent = std::move(cur.G);
  p.residual = cur.residual;
  p.iterations = it;
  return p;
}

double lambda(const Matrix& D, const DualPoint& point) {
  Matrix M = D;
  M.diagonal() += point.K;
  return (point.K.dot(point.u) - logdet_pd(M)) / static_cast<double>(D.rows());
}

double lambda(const Matrix& D, const Vector& u, const KSolveOptions& opt) { return lambda(D, solve_K(D, u, opt)); }

Matrix grad_K(const Matrix& D, const DualPoint& point) {
  (void)D;
  const Matrix H = point.resolvent.cwiseProduct(point.resolvent);
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "grad_K: Hadamard square not PD");
  Matrix J = -llt.solve(Matrix::Identity(H.rows(), H.cols()));
  return 0.5 * (J + J.transpose());
}

BoundaryReport boundary_epsilon(const Matrix& D, const std::vector<Vector>& points, const KSolveOptions& opt) {
  BoundaryReport rep;
  rep.diagonal_bound = std::numeric_limits<double>::infinity();
  rep.offdiag_bound = 0.0;
  for (const Vector& u : points) {
    const DualPoint p = solve_K(D, u, opt);
    const Matrix J = grad_K(D, p);
    for (Eigen::Index x = 0; x < J.rows(); ++x) {
      rep.diagonal_bound = std::min(rep.diagonal_bound, -J(x, x) * u(x) * u(x));
      for (Eigen::Index y = 0; y < J.cols(); ++y)
        if (x != y) rep.offdiag_bound = std::max(rep.offdiag_bound, std::abs(J(x, y)));
    }
  }
  rep.samples = points.size();
  const double off = rep.offdiag_bound > 0.0 ? 1.0 / rep.offdiag_bound : std::numeric_limits<double>::infinity();
  rep.epsilon = std::min(rep.diagonal_bound, off);
  return rep;
}

BoundaryReport boundary_diagnostics(const Matrix& D, double K_box, std::size_t samples, std::uint64_t seed,
                                    const KSolveOptions& opt) {
  if (!(K_box > 0.0)) throw Error(ErrorKind::InvalidInput, "boundary_diagnostics: K_box must be positive");
  auto rng = make_rng(seed, RngTag::Boundary, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double hi = std::min(K_box, opt.guard_high);
  std::vector<Vector> points;
  points.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    Vector u(D.rows());
    for (Eigen::Index x = 0; x < u.size(); ++x) u(x) = std::max(hi * unif(rng), 1e-6 * hi);
    points.push_back(std::move(u));
  }
  return boundary_epsilon(D, points, opt);
}

}  // namespace elman
