#include "elman/mixing.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "elman/error.hpp"

namespace elman {

double MixingFunction::eval(double r, int order) const {
  if (order < 0 || order > 2) throw Error(ErrorKind::InvalidInput, "mixing derivative order must be 0, 1 or 2");
  // Horner on the differentiated coefficient list.
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > static_cast<std::size_t>(order);) {
    double c = coeffs[k];
    for (int j = 0; j < order; ++j) c *= static_cast<double>(k - j);
    acc = acc * r + c;
  }
  return acc;
}

double MixingFunction::theta(double r) const { return r * d1(r) - eval(r) + eval(0.0); }

bool MixingFunction::is_zero() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c == 0.0; });
}

double CorrelationFunction::eval(double x, int order) const {
  if (order != 0 && order != 1) throw Error(ErrorKind::InvalidInput, "correlation derivative order must be 0 or 1");
  double acc = order == 0 ? c0 : 0.0;
  for (const auto& [w, lambda] : atoms) {
    const double l2 = lambda * lambda;
    acc += (order == 0 ? w : -w * l2) * std::exp(-l2 * x);
  }
  return acc;
}

double xi_eval(const MixingFunction& xi, double r, int order) { return xi.eval(r, order); }
double theta(const MixingFunction& xi, double r) { return xi.theta(r); }
double b_eval(const CorrelationFunction& b, double x, int order) { return b.eval(x, order); }

void validate(const MixingFunction& xi) {
  for (std::size_t p = 0; p < xi.coeffs.size(); ++p)
    if (!(xi.coeffs[p] >= 0.0) || !std::isfinite(xi.coeffs[p]))
      throw Error(ErrorKind::InvalidInput, "mixing coefficient " + std::to_string(p) + " must be finite and >= 0");
}

void validate(const CorrelationFunction& b) {
  if (!(b.c0 >= 0.0) || !std::isfinite(b.c0)) throw Error(ErrorKind::InvalidInput, "c0 must be finite and >= 0");
  for (std::size_t i = 0; i < b.atoms.size(); ++i) {
    const auto [w, lambda] = b.atoms[i];
    if (!(w > 0.0) || !(lambda > 0.0) || !std::isfinite(w) || !std::isfinite(lambda))
      throw Error(ErrorKind::InvalidInput, "atom " + std::to_string(i) + " needs w > 0 and lambda > 0");
  }
}

Restriction spherical_restriction(const CorrelationFunction& b, double q, int degree, double tol) {
  validate(b);
  if (!(q > 0.0)) throw Error(ErrorKind::InvalidInput, "restriction radius q must be positive");
  if (degree < 0) throw Error(ErrorKind::InvalidInput, "truncation degree must be >= 0");
  Restriction out;
  out.xi.coeffs.assign(static_cast<std::size_t>(degree) + 1, 0.0);
  out.xi.coeffs[0] = b.c0;
  for (const auto& [w, lambda] : b.atoms) {
    const double a = 2.0 * q * lambda * lambda;
    // Poisson(a) probabilities e^{-a} a^p / p!, computed in log space.
    for (int p = 0; p <= degree; ++p) {
      const double logp = -a + p * std::log(a) - std::lgamma(p + 1.0);
      out.xi.coeffs[p] += w * std::exp(logp);
    }
    // P(X > P) and sum_{p>P} p P(X=p) = a P(X >= P) for X ~ Poisson(a).
    out.tail_bound += w * boost::math::gamma_p(degree + 1.0, a);
    out.derivative_tail_bound += w * a * (degree == 0 ? 1.0 : boost::math::gamma_p(static_cast<double>(degree), a));
  }
  if (out.tail_bound > tol)
    throw Error(ErrorKind::TruncationInsufficient,
                "tail bound " + std::to_string(out.tail_bound) + " exceeds tolerance at degree " + std::to_string(degree),
                out.tail_bound);
  return out;
}

Restriction spherical_restriction_adaptive(const CorrelationFunction& b, double q, double tol, int max_degree) {
  validate(b);
  if (!(q > 0.0)) throw Error(ErrorKind::InvalidInput, "restriction radius q must be positive");
  for (int degree = 0; degree <= max_degree; ++degree) {
    double tail = 0.0, dtail = 0.0;
    for (const auto& [w, lambda] : b.atoms) {
      const double a = 2.0 * q * lambda * lambda;
      tail += w * boost::math::gamma_p(degree + 1.0, a);
      dtail += w * a * (degree == 0 ? 1.0 : boost::math::gamma_p(static_cast<double>(degree), a));
    }
    if (tail <= tol && dtail <= tol) return spherical_restriction(b, q, degree, tol);
  }
  throw Error(ErrorKind::TruncationInsufficient,
              "no truncation degree up to " + std::to_string(max_degree) + " meets tolerance");
}

double continuity_bound(const std::vector<MixingFunction>& xi0, const std::vector<MixingFunction>& xi1) {
  if (xi0.size() != xi1.size() || xi0.empty())
    throw Error(ErrorKind::InvalidInput, "continuity bound needs two mixing lists over the same sites");
  double acc = 0.0;
  for (std::size_t x = 0; x < xi0.size(); ++x) {
    const std::size_t len = std::max(xi0[x].coeffs.size(), xi1[x].coeffs.size());
    for (std::size_t p = 0; p < len; ++p) {
      const double a = p < xi0[x].coeffs.size() ? xi0[x].coeffs[p] : 0.0;
      const double c = p < xi1[x].coeffs.size() ? xi1[x].coeffs[p] : 0.0;
      acc += std::abs(a - c);
    }
  }
  return acc / (2.0 * static_cast<double>(xi0.size()));
}

CorrelationFunction scaled(const CorrelationFunction& b, double factor) {
  CorrelationFunction out = b;
  out.c0 *= factor;
  for (auto& atom : out.atoms) atom.first *= factor;
  return out;
}

}  // namespace elman
