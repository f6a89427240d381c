#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "elman/functionals.hpp"
#include "elman/lattice.hpp"
#include "elman/mixing.hpp"
#include "elman/types.hpp"

namespace elman {

/// H(sigma) = sum_p beta_p N^{-(p-1)/2} sum J_{i_1..i_p} sigma_{i_1}..sigma_{i_p}; covariance N xi((sigma,tau)_N).
struct SphericalField {
  int N = 0;
  std::vector<double> scale;                ///< beta_p N^{-(p-1)/2}
  std::vector<std::vector<double>> coeffs;  ///< J for degree p, row-major N^p

  double operator()(const Vector& sigma) const;
};

/// V(u) = sum_k a_k cos(omega_k . u + phi_k) + constant; covariance N B(||u - v||_N^2) in expectation.
struct EuclideanField {
  int N = 0;
  Matrix freq;   ///< features x N
  Vector phase;
  Vector amplitude;
  double constant = 0.0;

  double operator()(const Vector& u) const;
};

enum class FieldKind { Spherical, Euclidean };

struct FieldRealization {
  FieldKind kind = FieldKind::Spherical;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  SphericalField spherical;
  EuclideanField euclidean;

  int dimension() const { return kind == FieldKind::Spherical ? spherical.N : euclidean.N; }
  double operator()(const Vector& u) const { return kind == FieldKind::Spherical ? spherical(u) : euclidean(u); }
};

/// Polynomial chaos draw from an engine. Requires N <= 64, degree <= 4 and sum_p N^p <= max_coefficients.
SphericalField draw_spherical_field(const MixingFunction& xi, int N, std::mt19937_64& rng,
                                    double max_coefficients = 2e7);
/// Random Fourier features: per atom (w, lambda), K features with omega ~ N(0, (2 lambda^2 / N) I).
EuclideanField draw_euclidean_field(const CorrelationFunction& B, int N, int features_per_atom, std::mt19937_64& rng);

/// Realization keyed by (seed, index).
FieldRealization sample_spherical_H(const MixingFunction& xi, int N, std::uint64_t seed, std::uint64_t index = 0,
                                    double max_coefficients = 2e7);
FieldRealization sample_euclidean_V(const CorrelationFunction& B, int N, int features_per_atom = 4096,
                                    std::uint64_t seed = 1, std::uint64_t index = 0);

struct CovarianceEstimate {
  double target = 0.0;
  double mean = 0.0;
  double standard_error = 0.0;
  double z_score = 0.0;  ///< (mean - target) / standard_error
  long samples = 0;
};

/// Empirical E[H(sigma) H(tau)] over independent realizations against N xi((sigma, tau)_N).
CovarianceEstimate spherical_covariance(const MixingFunction& xi, int N, const Vector& sigma, const Vector& tau,
                                        long samples, std::uint64_t seed = 1, int threads = 0);
/// Empirical E[V(u) V(v)] against N B(||u - v||_N^2).
CovarianceEstimate euclidean_covariance(const CorrelationFunction& B, int N, const Vector& u, const Vector& v,
                                        long samples, int features_per_atom = 4096, std::uint64_t seed = 1,
                                        int threads = 0);

struct HShiftReport {
  double max_error = 0.0;     ///< max |H~(u + s e_1) - N n h^2/(2 mu) - H_h(u)| over trial points
  double tolerance = 0.0;     ///< 1e-9 N n
  double cross_term_error = 0.0;  ///< deviation of the shifted quadratic form from a linear function of sqrt(N) h
  int points = 0;
  bool passed = false;
};

/// Deterministic form of the field-shift identity with one Euclidean realization per site.
/// Trial points are N x n matrices (column x is u(x)).
HShiftReport h_shift_identity_check(const LatticeSpec& lat, const std::vector<FieldRealization>& fields, double h,
                                    const std::vector<Matrix>& trial_points);

struct FreeEnergyOptions {
  int N = 2;                ///< 2 or 3
  int draws = 200;
  int nodes = 48;           ///< angles per circle (N = 2); Gauss-Legendre nodes in cos(theta) (N = 3)
  double max_points = 1e7;  ///< quadrature points per draw
  std::uint64_t seed = 1;
  int threads = 0;
};

struct FreeEnergyEstimate {
  double mean = 0.0;            ///< (1/(N n)) E log Z over draws
  double standard_error = 0.0;
  double log_z_variance = 0.0;  ///< sample variance of (1/(N n)) log Z
  double deterministic = 0.0;   ///< (1/(N n)) log Z without disorder
  double annealed = 0.0;        ///< (1/(N n)) log E Z = deterministic + mean_x xi_x(1) / 2
  double jensen_allowance = 0.0;  ///< second-cumulant size of log E Z - E log Z, (N n / 2) log_z_variance
  long points = 0;
  std::vector<double> per_draw;
};

/// (1/(N n)) log int_{S_N^Omega} exp(-H(u)) omega(du) for H = (1/2) sum D (u_x, u_y) + sum H_x(u_x) + sqrt(N) sum h u_1.
/// `fields` holds one spherical realization per site, or is empty for the deterministic part.
double spherical_log_partition(const SphericalModelSpec& spec, const std::vector<FieldRealization>& fields, int N,
                               int nodes, double max_points = 1e7);

/// Finite-N demo: tensorized angular quadrature per draw, averaged over draws. No convergence claim.
FreeEnergyEstimate free_energy_quadrature(const SphericalModelSpec& spec, const FreeEnergyOptions& opt = {});

/// lim (N n)^{-1} log E Z_N = B(0)/2 + log(2 pi)/2 - log det(mu I - t Delta)/(2n) + h^2/(2 mu), after beta absorption.
double annealed_limit(const EuclideanModelSpec& spec);

}  // namespace elman
