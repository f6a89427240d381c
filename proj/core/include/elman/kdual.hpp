#pragma once

#include <cstdint>
#include <vector>

#include "elman/types.hpp"

namespace elman {

struct KSolveOptions {
  double tol = 1e-11;
  int max_iterations = 200;
  int max_halvings = 60;
  double guard_low = 1e-8;   ///< smallest admissible u(x)
  double guard_high = 1e6;   ///< largest admissible u(x)
};

/// u together with K = K^D(u), i.e. diag((D + diag K)^{-1}) = u.
struct DualPoint {
  Vector u;
  Vector K;
  Matrix resolvent;  ///< (D + diag K)^{-1}
  double residual = 0.0;
  int iterations = 0;
};

/// Damped Newton for K^D(u). Maximizes the strictly concave potential
/// log det(D + diag K) - <K, u>, whose gradient is the residual diag(G) - u.
DualPoint solve_K(const Matrix& D, const Vector& u, const KSolveOptions& opt = {});

/// Lambda^D(u) = (1/n)(sum K_x u_x - log det(D + diag K)).
double lambda(const Matrix& D, const Vector& u, const KSolveOptions& opt = {});
double lambda(const Matrix& D, const DualPoint& point);

/// Jacobian of K^D at a solved point: -((G o G))^{-1} with G the resolvent.
Matrix grad_K(const Matrix& D, const DualPoint& point);

struct BoundaryReport {
  double epsilon = 0.0;        ///< largest eps meeting both bounds on every sample
  double diagonal_bound = 0.0; ///< min over samples of -J_xx u_x^2
  double offdiag_bound = 0.0;  ///< max over samples of |J_xy|, x != y
  std::size_t samples = 0;
};

/// Boundary-bound epsilon over explicit sample points.
BoundaryReport boundary_epsilon(const Matrix& D, const std::vector<Vector>& points, const KSolveOptions& opt = {});

/// Samples u uniformly in (0, K_box)^n (clamped to the solver guard) and reports epsilon.
BoundaryReport boundary_diagnostics(const Matrix& D, double K_box, std::size_t samples, std::uint64_t seed = 1,
                                    const KSolveOptions& opt = {});

}  // namespace elman
