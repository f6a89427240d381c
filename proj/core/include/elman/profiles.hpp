#pragma once

#include <string>
#include <utility>
#include <vector>

#include "elman/mixing.hpp"
#include "elman/types.hpp"

namespace elman {

/// Separation between the Y domain (s^r <= 1 - eta) and its Y0 extension.
inline constexpr double kDomainEta = 1e-8;

/// 0 = m_0 < m_1 < ... < m_r = 1 and per-site 0 <= s^1 <= ... <= s^r <= 1.
struct TalagrandProfile {
  std::vector<double> m;  ///< size r+1, endpoints included
  Matrix s;               ///< n x r, column k-1 holds s^k
  bool extended = false;  ///< true admits s^r = 1 (Y0 extension)

  int levels() const { return static_cast<int>(m.size()) - 1; }
  Eigen::Index sites() const { return s.rows(); }
  /// s^k(x) for k = 0..r+1 with the pinned endpoints s^0 = 0, s^{r+1} = 1.
  double at(Eigen::Index x, int k) const;
};

/// 0 < t_0 < ... < t_r = 1 and per-site 0 = q^0 <= q^1 <= ... <= q^r = 1.
struct PanchenkoProfile {
  std::vector<double> t;  ///< size r+1, t.back() = 1
  Matrix q;               ///< n x (r-1), column k-1 holds q^k

  int levels() const { return static_cast<int>(t.size()) - 1; }
  Eigen::Index sites() const { return q.rows(); }
  double at(Eigen::Index x, int k) const;
};

/// zeta = sum of atoms, Phi_x piecewise linear through (nodes, phi).
struct ContinuumProfile {
  std::vector<std::pair<double, double>> atoms;  ///< (location, mass), sorted by location
  std::vector<double> nodes;                     ///< 0 = nodes.front() < ... < nodes.back() = q_t
  Matrix phi;                                    ///< n x nodes.size()
  Vector caps;                                   ///< q(x); all ones for spherical profiles
  double q_star = 0.0;
  bool extended = false;                         ///< Y0-flagged (atoms at 0 and 1 allowed)

  Eigen::Index sites() const { return phi.rows(); }
  double q_total() const { return nodes.back(); }
  /// zeta([0, s]).
  double mass_below(double s) const;
  /// Phi(s) for every site.
  Vector phi_at(double s) const;
  /// Phi'(s) on the segment containing s (right derivative at nodes).
  Vector phi_slope(double s) const;
  /// Sorted union of nodes and atom locations.
  std::vector<double> breakpoints() const;
};

/// Per-site breakpoints p^0 = 0 <= ... <= p^J = 1 with zeta([0,u]) = w_j on [p^j, p^{j+1}).
/// Talagrand profiles map to J = r+1 with w = m, Panchenko profiles to J = r with w = t_0..t_{r-1}.
struct StepProfile {
  Matrix P;               ///< n x (J+1)
  std::vector<double> w;  ///< J weights

  int segments() const { return static_cast<int>(w.size()); }
};

StepProfile to_steps(const TalagrandProfile& p);
StepProfile to_steps(const PanchenkoProfile& p);

/// delta^j_x = sum_{k >= j} w_k (p^{k+1} - p^k); n x (J+1), last column zero.
Matrix step_delta(const StepProfile& sp);
/// d^j_x = sum_{k >= j} w_k (xi'(p^{k+1}) - xi'(p^k)); n x (J+1), last column zero.
Matrix step_d(const StepProfile& sp, const std::vector<MixingFunction>& xi);

/// Values indexed by level, starting at `first`.
struct LevelSequence {
  int first = 0;
  Matrix values;  ///< n x count

  Vector level(int l) const { return values.col(l - first); }
  int last() const { return first + static_cast<int>(values.cols()) - 1; }
};

/// delta^1 .. delta^{r+1} (delta^{r+1} = 0).
LevelSequence delta_sequence(const TalagrandProfile& p);
/// d^1 .. d^{r+1} for Talagrand profiles.
LevelSequence d_sequence(const TalagrandProfile& p, const std::vector<MixingFunction>& xi);
/// d^0 .. d^r for Panchenko profiles.
LevelSequence d_sequence(const PanchenkoProfile& p, const std::vector<MixingFunction>& xi);

/// delta_x(s) = int_s^{q_t} zeta([0,u]) Phi'_x(u) du, closed form per segment.
Vector delta_of(const ContinuumProfile& c, double s);
/// d_x(s) = int_s^{q_t} zeta([0,u]) xi''_x(Phi_x(u)) Phi'_x(u) du, Gauss-Legendre per segment.
Vector d_of(const ContinuumProfile& c, const std::vector<MixingFunction>& xi, double s, int quad = 32);

ContinuumProfile talagrand_to_continuum(const TalagrandProfile& p);
ContinuumProfile panchenko_to_continuum(const PanchenkoProfile& p);

/// Y(q) image of a unit-cap profile: Phi_x(s) = q(x) Phi^1_x(s/q_t), zeta pushed forward by s -> q_t s.
ContinuumProfile scale_to_caps(const ContinuumProfile& unit, const Vector& caps);
/// Inverse of scale_to_caps.
ContinuumProfile normalize_caps(const ContinuumProfile& c);

/// Max over nodes of |(1/n) sum_x Phi_x(s)/q(x) - s/q_t|.
double averaging_residual(const ContinuumProfile& c);

std::vector<std::string> validate(const TalagrandProfile& p);
std::vector<std::string> validate(const PanchenkoProfile& p);
std::vector<std::string> validate(const ContinuumProfile& c);

/// Throws InvalidInput (or DomainViolation for the Y-domain guard) listing every violation.
void require_valid(const TalagrandProfile& p);
void require_valid(const PanchenkoProfile& p);
void require_valid(const ContinuumProfile& c);

}  // namespace elman
