#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "elman/functionals.hpp"
#include "elman/profiles.hpp"
#include "elman/types.hpp"

namespace elman {

/// Cascade recursion F_k(v) = (1/t_k) log E exp(t_k F_{k+1}(v + z^{k+1})), k = r-1..0, with the
/// result E F_0(origin + z^0). Increments are independent centered Gaussians with diagonal covariance.
struct RecursionSpec {
  std::vector<double> t;  ///< t_0 < ... < t_{r-1}, each in (0, 1]
  Matrix variance;        ///< dims x (r+1); column 0 is z^0, column k is z^k
  Vector origin;          ///< input before any increment
  std::function<double(const Vector&)> leaf;  ///< F_r of the accumulated input
  double leaf_cost = 1.0;                     ///< work units per leaf call, for the budget

  int levels() const { return static_cast<int>(t.size()); }
  Eigen::Index dims() const { return variance.rows(); }
};

enum class RecursionMethod { GaussHermite, MonteCarlo };

struct RecursionOptions {
  RecursionMethod method = RecursionMethod::GaussHermite;
  int nodes = 40;            ///< per Gaussian dimension, lowered to fit max_work
  double max_work = 1e8;     ///< leaf calls times leaf_cost
  int min_nodes = 4;         ///< fewer nodes than this is BudgetExceeded
  long long samples = 200000;  ///< Monte Carlo leaf calls (antithetic pairs)
  std::uint64_t seed = 1;
  int threads = 0;
};

struct RecursionResult {
  double value = 0.0;
  double error = 0.0;  ///< |F(nodes) - F(coarse)| or one standard error
  RecursionMethod method = RecursionMethod::GaussHermite;
  int nodes = 0;        ///< Gauss-Hermite nodes per dimension, or samples per level
  int coarse_nodes = 0;
  int dimensions = 0;   ///< Gaussian coordinates with positive variance
  double work = 0.0;
};

/// Throws BudgetExceeded when the tensor grid does not fit max_work at min_nodes.
RecursionResult evaluate_recursion(const RecursionSpec& spec, const RecursionOptions& opt = {});

/// Recursion for |Omega| Y^b(v): quadratic leaf, increments of xi'_x(q^k), level-0 variance xi'_x(0).
RecursionSpec y_b_recursion(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Vector& b,
                            const Vector& v);
/// Y^b(v) by numeric recursion.
RecursionResult y_b_numeric(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Vector& b,
                            const Vector& v, const RecursionOptions& opt = {});

/// Recursion for |Omega| M Gamma_2: scalar field with increments sum_x theta_x(q^k) - theta_x(q^{k-1}), leaf sqrt(M) y.
RecursionSpec gamma2_recursion(const SphericalModelSpec& spec, const PanchenkoProfile& p, int M);
RecursionResult gamma2_numeric(const SphericalModelSpec& spec, const PanchenkoProfile& p, int M,
                               const RecursionOptions& opt = {});

/// Spherical leaf for Gamma_1 at M in {1, 2}. M = 1 sums over {-1, 1}^Omega (counting measure);
/// M = 2 uses the trapezoid rule on circles of radius sqrt 2 with arc-length measure.
struct SphericalLeaf {
  int M = 1;
  int torus_points = 0;          ///< angles per circle (M = 2)
  double refinement_change = 0;  ///< largest change from torus_points / 2 to torus_points
};

struct Gamma1Options {
  RecursionOptions recursion;
  int min_torus_points = 16;
  int max_torus_points = 512;
  double torus_tol = 1e-12;
};

struct Gamma1Result {
  RecursionResult recursion;
  SphericalLeaf leaf;
  double value = 0.0;  ///< Gamma_1^M
  double error = 0.0;
};

/// Gamma_1^M = (1/(n M)) E log <int exp(sum_x (Z_x, v_x)) omega_{M,D,h}(dv)>, with Z_x covariance
/// xi'_x of the cascade overlap.
Gamma1Result gamma1_small_M(const SphericalModelSpec& spec, const PanchenkoProfile& p, int M,
                            const Gamma1Options& opt = {});

struct WMinimum {
  Vector b;
  double value = 0.0;
  double gradient = 0.0;  ///< max |dW/db_x| at b
  int iterations = 0;
};

/// inf_b W(b) over D + b - d^0 > 0 by damped Newton on finite-difference derivatives of W.
WMinimum minimize_w(const SphericalModelSpec& spec, const PanchenkoProfile& p, double tol = 1e-9);

struct AMRow {
  int M = 0;
  double gamma1 = 0.0;
  double gamma1_error = 0.0;
  double gamma2 = 0.0;
  double value = 0.0;  ///< A_M = Gamma_1 - Gamma_2
  RecursionMethod method = RecursionMethod::GaussHermite;
};

struct AMTrend {
  std::vector<AMRow> rows;  ///< M = 1, 2
  double w_inf = 0.0;       ///< inf_b W(b), the M -> infinity value of Gamma_1
  double a_limit = 0.0;     ///< inf_b W(b) - Gamma_2
};

/// Falls back to Monte Carlo when the tensor grid exceeds the budget.
AMTrend a_m_trend(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Gamma1Options& opt = {});

}  // namespace elman
