#include <cmath>
#include <string>

#include "checks.hpp"
#include "elman/montecarlo.hpp"
#include "elman/verify/instances.hpp"

namespace elman::verify::detail {

std::vector<CriterionResult> check_covariance(const Context& ctx) {
  Tally t = ctx.tally("AC-14");
  const int N = 8;
  const long samples = 10000;
  const double root = std::sqrt(static_cast<double>(N));
  const std::uint64_t seed = ctx.options.seed;
  const int threads = ctx.options.threads;

  // Spherical: overlap 0.5 under xi = x^2, and the variance of a mixed xi.
  Vector sigma = Vector::Zero(N), tau = Vector::Zero(N);
  sigma(0) = root;
  tau(0) = 0.5 * root;
  tau(1) = std::sqrt(0.75) * root;
  try {
    const CovarianceEstimate c = spherical_covariance(MixingFunction{{0.0, 0.0, 1.0}}, N, sigma, tau, samples, seed, threads);
    t.add(std::abs(c.z_score), "spherical cross covariance");
    const CovarianceEstimate v =
        spherical_covariance(MixingFunction{{0.1, 0.3, 0.5, 0.2, 0.1}}, N, sigma, sigma, samples, seed + 1, threads);
    t.add(std::abs(v.z_score), "spherical variance");
  } catch (const std::exception& e) {
    t.error("spherical", e.what());
  }

  // Euclidean: one atom (1, 1) at ||u - v||_N^2 = 1 along two directions; the pair difference checks isotropy.
  CorrelationFunction B;
  B.atoms = {{1.0, 1.0}};
  const Vector origin = Vector::Zero(N);
  Vector e1 = Vector::Zero(N), diag = Vector::Constant(N, 1.0);
  e1(0) = root;
  try {
    const CovarianceEstimate a = euclidean_covariance(B, N, origin, e1, samples, 4096, seed + 2, threads);
    const CovarianceEstimate b = euclidean_covariance(B, N, origin, diag, samples, 4096, seed + 3, threads);
    t.add(std::abs(a.z_score), "euclidean covariance, axis direction");
    t.add(std::abs(b.z_score), "euclidean covariance, diagonal direction");
    const double se = std::hypot(a.standard_error, b.standard_error);
    t.add(std::abs(a.mean - b.mean) / se, "euclidean isotropy");
  } catch (const std::exception& e) {
    t.error("euclidean", e.what());
  }
  return {t.result()};
}

std::vector<CriterionResult> check_h_shift(const Context& ctx) {
  Tally t = ctx.tally("AC-15");
  const int N = 8;
  for (int i = 0; i < 10; ++i) {
    auto rng = ctx.rng(15, i);
    const std::string name = "realization " + std::to_string(i);
    try {
      LatticeSpec lat;
      lat.L = 2;
      lat.d = 1;
      lat.mu = uniform(rng, 0.5, 2.0);
      lat.t = uniform(rng, 0.1, 1.0);
      const double h = uniform(rng, -1.0, 1.0);
      const CorrelationFunction B = random_correlation(rng);
      const int n = static_cast<int>(lat.site_count());
      std::vector<FieldRealization> fields;
      for (int x = 0; x < n; ++x) fields.push_back(sample_euclidean_V(B, N, 512, ctx.options.seed, i * n + x));
      std::vector<Matrix> points;
      for (int k = 0; k < 100; ++k) {
        Matrix u(N, n);
        for (int a = 0; a < N; ++a)
          for (int x = 0; x < n; ++x) u(a, x) = uniform(rng, -2.0, 2.0);
        points.push_back(u);
      }
      const HShiftReport rep = h_shift_identity_check(lat, fields, h, points);
      t.add(std::max(rep.max_error, rep.cross_term_error) / (N * n), name);
    } catch (const std::exception& e) {
      t.error(name, e.what());
    }
  }
  return {t.result()};
}

}  // namespace elman::verify::detail
