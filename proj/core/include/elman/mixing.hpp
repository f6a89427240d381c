#pragma once

#include <utility>
#include <vector>

namespace elman {

/// xi(r) = sum_p beta_p^2 r^p with nonnegative coefficients (coeffs[p] = beta_p^2).
struct MixingFunction {
  std::vector<double> coeffs;

  /// Derivative of order 0, 1 or 2.
  double eval(double r, int order = 0) const;
  double operator()(double r) const { return eval(r, 0); }
  double d1(double r) const { return eval(r, 1); }
  double d2(double r) const { return eval(r, 2); }
  /// theta(r) = r xi'(r) - xi(r) + xi(0); theta' = r xi''.
  double theta(double r) const;
  bool is_zero() const;
};

/// B(x) = c0 + sum_i w_i exp(-lambda_i^2 x).
struct CorrelationFunction {
  double c0 = 0.0;
  std::vector<std::pair<double, double>> atoms;  ///< (w, lambda)

  double eval(double x, int order = 0) const;
  double at_zero() const { return eval(0.0, 0); }
};

double xi_eval(const MixingFunction& xi, double r, int order);
double theta(const MixingFunction& xi, double r);
double b_eval(const CorrelationFunction& b, double x, int order);

void validate(const MixingFunction& xi);
void validate(const CorrelationFunction& b);

struct Restriction {
  MixingFunction xi;
  double tail_bound = 0.0;             ///< bound on sum_{p>P} beta_p^2
  double derivative_tail_bound = 0.0;  ///< bound on sum_{p>P} p beta_p^2
};

/// Coefficients of B_q(r) = B(2q(1-r)) up to degree P. Throws TruncationInsufficient
/// when the tail bound exceeds tol.
Restriction spherical_restriction(const CorrelationFunction& b, double q, int degree, double tol);

/// Smallest degree whose tail bounds (value and first derivative) fall below tol.
Restriction spherical_restriction_adaptive(const CorrelationFunction& b, double q, double tol, int max_degree = 400);

/// (1/2n) sum_{x,p} |beta0_p(x)^2 - beta1_p(x)^2|.
double continuity_bound(const std::vector<MixingFunction>& xi0, const std::vector<MixingFunction>& xi1);

/// Scales every coefficient by factor (used for beta^2 B reparameterization).
CorrelationFunction scaled(const CorrelationFunction& b, double factor);

}  // namespace elman
