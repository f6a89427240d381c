#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elman/kdual.hpp"
#include "elman/lattice.hpp"
#include "elman/mixing.hpp"
#include "elman/profiles.hpp"
#include "elman/types.hpp"

namespace elman {

struct SphericalModelSpec {
  Matrix D;
  std::vector<MixingFunction> xi;  ///< one per site
  Vector h;

  Eigen::Index sites() const { return D.rows(); }
};

struct EuclideanModelSpec {
  LatticeSpec lattice;
  CorrelationFunction B;
  double h = 0.0;
  double beta = 1.0;
};

struct EvaluationReport {
  double value = 0.0;
  std::map<std::string, double> terms;
  std::map<std::string, double> residuals;
  std::vector<std::string> domain_flags;
};

void validate(const SphericalModelSpec& spec);
void validate(const EuclideanModelSpec& spec);

/// Discrete B for a Talagrand profile (requires s^r <= 1 - eta).
EvaluationReport eval_B_discrete(const SphericalModelSpec& spec, const TalagrandProfile& p);

/// Continuum B by piecewise Gauss-Legendre with `quad` nodes per segment.
/// `q_star` overrides the profile's choice. residuals["quadrature"] compares against 2*quad nodes.
EvaluationReport eval_B_continuum(const SphericalModelSpec& spec, const ContinuumProfile& c, int quad = 32,
                                  std::optional<double> q_star = std::nullopt);

EvaluationReport eval_A_discrete(const SphericalModelSpec& spec, const TalagrandProfile& p, const Vector& b);
EvaluationReport eval_A_discrete(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Vector& b);
/// Step-profile form shared by both parameterizations.
EvaluationReport eval_A_steps(const SphericalModelSpec& spec, const StepProfile& sp, const Vector& b);

/// Continuum A(zeta, Phi, b) by quadrature, including the -log det(D + b) normalization.
EvaluationReport eval_A_continuum(const SphericalModelSpec& spec, const ContinuumProfile& c, const Vector& b,
                                  int quad = 32);

/// Continuum A with its gradient in b.
double a_continuum_value_gradient(const SphericalModelSpec& spec, const ContinuumProfile& c, const Vector& b,
                                  Vector& db, int quad = 32);

enum class Route { Direct, Mapped };

/// P_{beta,q}(zeta, Phi) for a profile over Y(q).
EvaluationReport eval_P(const EuclideanModelSpec& spec, const Vector& q, const ContinuumProfile& c, Route route,
                        int quad = 32, std::optional<double> q_star = std::nullopt, double truncation_tol = 1e-13);

/// Spherical model of the mapped route: D_q = -t diag(sqrt q) Delta diag(sqrt q), xi_x = B_{q(x)}, h = 0
/// (for a beta = 1 spec). Returns the largest truncation tail bound through `tail`.
SphericalModelSpec mapped_spherical_model(const EuclideanModelSpec& spec, const Vector& q, double truncation_tol,
                                          double* tail = nullptr);

/// Y^b(v) for a Panchenko profile; resolvent (D + b - d^0)^{-1}.
double y_b_closed_form(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Vector& b, const Vector& v);
/// W(b) = Y^b(h) + mean(b)/2.
double w_of_b(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Vector& b);
/// (1/2n) sum_x sum_k t_k (theta_x(q^{k+1}) - theta_x(q^k)).
double gamma2_closed_form(const SphericalModelSpec& spec, const PanchenkoProfile& p);

/// (h, mu, t, B) -> (beta h, beta mu, beta t, beta^2 B) at beta = 1.
EuclideanModelSpec reparameterize_beta(const EuclideanModelSpec& spec);

/// Smallest b offset keeping every log-det argument of A positive definite: D + b - d^0 > 0.
bool a_domain_ok(const SphericalModelSpec& spec, const StepProfile& sp, const Vector& b);

// ---- Gradients used by the optimizers -------------------------------------------------

/// B over a Talagrand profile with its gradient in s (n x r) and in m (entries 1..r-1 meaningful).
struct BGradient {
  double value = 0.0;
  Matrix ds;
  Vector dm;
};
BGradient b_value_gradient(const SphericalModelSpec& spec, const TalagrandProfile& p);

/// A over a step profile with gradients in b, interior breakpoints (n x (J+1)) and weights.
struct AGradient {
  double value = 0.0;
  Vector db;
  Matrix dP;
  Vector dw;
};
AGradient a_value_gradient(const SphericalModelSpec& spec, const StepProfile& sp, const Vector& b);

}  // namespace elman
