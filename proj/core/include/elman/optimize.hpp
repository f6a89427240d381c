#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elman/functionals.hpp"
#include "elman/profiles.hpp"
#include "elman/types.hpp"

namespace elman {

/// Stationarity certificate of a profile minimizer.
struct Certificate {
  double value = 0.0;
  double residual_cs1 = 0.0;   ///< interior recursion equations
  double residual_csb = 0.0;   ///< top-level resolvent equation
  double gap_AB = 0.0;         ///< |inf_b A - B| at the returned profile
  double residual_b = 0.0;     ///< critical equation residual of b*
  double projected_gradient = 0.0;
  int iterations = 0;
  bool converged = false;
  bool best_effort = false;
  std::vector<std::string> kkt_flags;  ///< active boundary coordinates
  std::vector<std::string> notes;
};

enum class Target { B, A };
enum class Parameterization { Talagrand, Panchenko };

struct OptimizeOptions {
  double gradient_tol = 1e-10;  ///< projected-gradient stopping level
  double value_tol = 1e-10;     ///< stall level: improvement over 5 iterations
  int max_iterations = 4000;
  int polish_iterations = 40;
  int multistart = 32;
  std::uint64_t seed = 1;
  int threads = 0;              ///< 0 reads ELMAN_THREADS, else hardware concurrency
  double weight_margin = 1e-6;  ///< free weights stay in [margin, 1 - margin]
  double weight_separation = 1e-9;
  double b_tol = 1e-11;         ///< critical equation residual target for b
  /// Panchenko form: pin t_0 and t_{r-1}. t_0 -> 0 with t_{r-1} -> 1 is the image of the Talagrand
  /// profiles with one level fewer.
  std::optional<double> first_weight;
  std::optional<double> last_weight;
};

// ---- inf over b ----------------------------------------------------------------------

struct BSolution {
  Vector b;
  double value = 0.0;
  double residual = 0.0;  ///< max_x |2n dA/db_x|
  int iterations = 0;
  bool best_effort = false;  ///< strict convexity preconditions not met
};

/// Unique minimizer of the strictly convex map b -> A(profile, b).
BSolution minimize_b(const SphericalModelSpec& spec, const StepProfile& sp,
                     const std::optional<Vector>& start = std::nullopt, double tol = 1e-11);
BSolution minimize_b(const SphericalModelSpec& spec, const TalagrandProfile& p,
                     const std::optional<Vector>& start = std::nullopt, double tol = 1e-11);
BSolution minimize_b(const SphericalModelSpec& spec, const PanchenkoProfile& p,
                     const std::optional<Vector>& start = std::nullopt, double tol = 1e-11);
/// Same for a continuum profile evaluated by quadrature.
BSolution minimize_b(const SphericalModelSpec& spec, const ContinuumProfile& c,
                     const std::optional<Vector>& start = std::nullopt, double tol = 1e-11, int quad = 32);

// ---- inf over profiles ---------------------------------------------------------------

struct ProfileSolution {
  Parameterization form = Parameterization::Talagrand;
  TalagrandProfile talagrand;  ///< set when form is Talagrand
  PanchenkoProfile panchenko;  ///< set when form is Panchenko
  StepProfile steps;
  Vector b;
  Certificate cert;
};

/// inf over s at the weights of `start` (Talagrand form).
ProfileSolution minimize_s(const SphericalModelSpec& spec, const TalagrandProfile& start, Target target,
                           const OptimizeOptions& opt = {});
/// inf over q at the weights of `start` (Panchenko form, A only).
ProfileSolution minimize_s(const SphericalModelSpec& spec, const PanchenkoProfile& start,
                           const OptimizeOptions& opt = {});

struct FullSolution {
  ProfileSolution best;
  std::vector<double> start_values;  ///< final value per start, in start order
  double spread = 0.0;               ///< max - min over starts
  int distinct_optima = 1;           ///< clusters of start values separated by more than 1e-6
};

/// inf over weights and breakpoints with `levels` levels. A warm start, if given, is start 0.
FullSolution minimize_full(const SphericalModelSpec& spec, int levels, Target target,
                           Parameterization form = Parameterization::Talagrand, const OptimizeOptions& opt = {},
                           const std::optional<ProfileSolution>& warm = std::nullopt);

/// minimize_full for r = 1..max_levels, each warm-started from the embedding of the previous
/// optimum, so the values are nonincreasing in r.
std::vector<FullSolution> minimize_ladder(const SphericalModelSpec& spec, int max_levels, Target target,
                                          const OptimizeOptions& opt = {});

/// Talagrand profile with r+1 levels and the same B and A values (duplicated top level).
TalagrandProfile embed_next_level(const TalagrandProfile& p);

/// Certificate of an arbitrary Talagrand profile (b* is recomputed).
Certificate certify(const SphericalModelSpec& spec, const TalagrandProfile& p, double b_tol = 1e-11);

// ---- sup over q ----------------------------------------------------------------------

struct SupOptions {
  double box_m = 0.05;                           ///< q in [m, 1/m]^Omega
  std::optional<std::pair<Vector, Vector>> region;  ///< explicit [lo, hi] box, overrides box_m
  int levels = 1;
  int grid = 9;                                  ///< coarse grid points along the constant direction
  int refine_passes = 4;
  double truncation_tol = 1e-13;
  OptimizeOptions inner;
};

struct SupPoint {
  Vector q;
  double value = 0.0;
};

struct SupSolution {
  Vector q;
  double value = 0.0;
  FullSolution inner;
  std::vector<SupPoint> table;  ///< every evaluated (q, inf value)
  double truncation_tail = 0.0;
  Certificate cert;
};

/// Value of the inner problem at fixed q: h^2/(2mu) + (1/2n) sum(-mu q + log q) + inf B_q (beta absorbed).
double inner_value(const EuclideanModelSpec& spec, const Vector& q, const SupOptions& opt,
                   FullSolution* inner = nullptr, double* tail = nullptr);

SupSolution sup_over_q(const EuclideanModelSpec& spec, const SupOptions& opt = {});

// ---- diagnostics ---------------------------------------------------------------------

/// G_x(q_M) at the top of the support of zeta.
Vector boundary_gap(const SphericalModelSpec& spec, const ContinuumProfile& c, int quad = 32);

/// Euclidean projection of v onto {x_1 <= ... <= x_k, lo <= x_i <= hi} (pool adjacent violators, then clip).
void project_monotone(double* v, int count, double lo, double hi);

}  // namespace elman
