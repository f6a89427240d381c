#include "elman/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "elman/error.hpp"
#include "elman/quadrature.hpp"
#include "elman/random.hpp"
#include "parallel.hpp"

namespace elman {

namespace {

constexpr int kMaxDegree = 4;
constexpr int kMaxDimension = 64;

double dot_n(const Vector& a, const Vector& b) { return a.dot(b) / static_cast<double>(a.size()); }

CovarianceEstimate summarize(const std::vector<double>& products, double target) {
  CovarianceEstimate est;
  est.target = target;
  est.samples = static_cast<long>(products.size());
  const double S = static_cast<double>(products.size());
  double mean = 0.0;
  for (double v : products) mean += v;
  mean /= S;
  double sq = 0.0;
  for (double v : products) sq += (v - mean) * (v - mean);
  est.mean = mean;
  est.standard_error = products.size() > 1 ? std::sqrt(sq / (S - 1.0) / S) : std::numeric_limits<double>::infinity();
  est.z_score = est.standard_error > 0.0 ? (mean - target) / est.standard_error : 0.0;
  return est;
}

/// Quadrature points on the sphere of radius sqrt(N) in R^N, N in {2, 3}, with surface-measure weights.
struct SpherePoints {
  std::vector<Vector> points;
  std::vector<double> log_weights;
};

SpherePoints sphere_points(int N, int nodes) {
  SpherePoints sp;
  if (N == 2) {
    const double w = std::log(std::sqrt(2.0) * 2.0 * std::numbers::pi / nodes);
    for (int j = 0; j < nodes; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / nodes;
      Vector v(2);
      v << std::cos(phi), std::sin(phi);
      sp.points.push_back(std::sqrt(2.0) * v);
      sp.log_weights.push_back(w);
    }
    return sp;
  }
  const quad::Rule& gl = quad::gauss_legendre(nodes);
  const int azimuths = 2 * nodes;
  for (int i = 0; i < nodes; ++i) {
    const double c = gl.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double w = std::log(3.0 * gl.weights[i] * 2.0 * std::numbers::pi / azimuths);
    for (int j = 0; j < azimuths; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / azimuths;
      Vector v(3);
      v << c, s * std::cos(phi), s * std::sin(phi);
      sp.points.push_back(std::sqrt(3.0) * v);
      sp.log_weights.push_back(w);
    }
  }
  return sp;
}

}  // namespace

double SphericalField::operator()(const Vector& sigma) const {
  if (sigma.size() != N) throw Error(ErrorKind::InvalidInput, "point dimension differs from the field's N");
  double total = 0.0;
  std::vector<double> cur, next;
  for (std::size_t p = 0; p < coeffs.size(); ++p) {
    if (scale[p] == 0.0) continue;
    cur = coeffs[p];
    for (std::size_t level = 0; level < p; ++level) {
      const std::size_t rows = cur.size() / static_cast<std::size_t>(N);
      next.assign(rows, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int i = 0; i < N; ++i) acc += cur[r * N + i] * sigma(i);
        next[r] = acc;
      }
      cur.swap(next);
    }
    total += scale[p] * cur[0];
  }
  return total;
}

double EuclideanField::operator()(const Vector& u) const {
  if (u.size() != N) throw Error(ErrorKind::InvalidInput, "point dimension differs from the field's N");
  if (freq.rows() == 0) return constant;
  return amplitude.dot(((freq * u) + phase).array().cos().matrix()) + constant;
}

SphericalField draw_spherical_field(const MixingFunction& xi, int N, std::mt19937_64& rng, double max_coefficients) {
  validate(xi);
  if (N < 1 || N > kMaxDimension) throw Error(ErrorKind::InvalidInput, "spherical sampler needs 1 <= N <= 64");
  int degree = -1;
  for (std::size_t p = 0; p < xi.coeffs.size(); ++p)
    if (xi.coeffs[p] != 0.0) degree = static_cast<int>(p);
  if (degree > kMaxDegree) throw Error(ErrorKind::BudgetExceeded, "spherical sampler supports degree <= 4");
  double total = 0.0;
  for (int p = 0; p <= degree; ++p)
    if (xi.coeffs[p] != 0.0) total += std::pow(static_cast<double>(N), p);
  if (total > max_coefficients) throw Error(ErrorKind::BudgetExceeded, "N^p coefficient tensor exceeds the budget");

  SphericalField f;
  f.N = N;
  f.scale.assign(degree + 1, 0.0);
  f.coeffs.resize(degree + 1);
  std::normal_distribution<double> normal;
  for (int p = 0; p <= degree; ++p) {
    if (xi.coeffs[p] == 0.0) continue;
    f.scale[p] = std::sqrt(xi.coeffs[p]) * std::pow(static_cast<double>(N), -0.5 * (p - 1));
    const auto count = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(N), p)));
    f.coeffs[p].resize(count);
    for (auto& c : f.coeffs[p]) c = normal(rng);
  }
  return f;
}

EuclideanField draw_euclidean_field(const CorrelationFunction& B, int N, int features_per_atom,
                                    std::mt19937_64& rng) {
  validate(B);
  if (N < 1 || N > kMaxDimension) throw Error(ErrorKind::InvalidInput, "Euclidean sampler needs 1 <= N <= 64");
  if (features_per_atom < 1) throw Error(ErrorKind::InvalidInput, "need at least one feature per atom");
  const auto K = static_cast<Eigen::Index>(features_per_atom);
  const auto atoms = static_cast<Eigen::Index>(B.atoms.size());
  EuclideanField f;
  f.N = N;
  f.freq.resize(atoms * K, N);
  f.phase.resize(atoms * K);
  f.amplitude.resize(atoms * K);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  for (Eigen::Index a = 0; a < atoms; ++a) {
    const auto [w, lambda] = B.atoms[a];
    const double sd = std::sqrt(2.0 * lambda * lambda / N);
    const double amp = std::sqrt(2.0 * w * N / static_cast<double>(K));
    for (Eigen::Index k = 0; k < K; ++k) {
      const Eigen::Index row = a * K + k;
      for (int i = 0; i < N; ++i) f.freq(row, i) = sd * normal(rng);
      f.phase(row) = uniform(rng);
      f.amplitude(row) = amp;
    }
  }
  f.constant = std::sqrt(B.c0 * N) * normal(rng);
  return f;
}

FieldRealization sample_spherical_H(const MixingFunction& xi, int N, std::uint64_t seed, std::uint64_t index,
                                    double max_coefficients) {
  auto rng = make_rng(seed, RngTag::Spherical, index);
  FieldRealization r;
  r.kind = FieldKind::Spherical;
  r.seed = seed;
  r.index = index;
  r.spherical = draw_spherical_field(xi, N, rng, max_coefficients);
  return r;
}

FieldRealization sample_euclidean_V(const CorrelationFunction& B, int N, int features_per_atom, std::uint64_t seed,
                                    std::uint64_t index) {
  auto rng = make_rng(seed, RngTag::Euclidean, index);
  FieldRealization r;
  r.kind = FieldKind::Euclidean;
  r.seed = seed;
  r.index = index;
  r.euclidean = draw_euclidean_field(B, N, features_per_atom, rng);
  return r;
}

CovarianceEstimate spherical_covariance(const MixingFunction& xi, int N, const Vector& sigma, const Vector& tau,
                                        long samples, std::uint64_t seed, int threads) {
  if (sigma.size() != N || tau.size() != N) throw Error(ErrorKind::InvalidInput, "points need dimension N");
  if (samples < 2) throw Error(ErrorKind::InvalidInput, "need at least two samples");
  std::vector<double> products(samples);
  detail::parallel_for(static_cast<int>(samples), detail::thread_count(threads), [&](int s) {
    const FieldRealization f = sample_spherical_H(xi, N, seed, static_cast<std::uint64_t>(s));
    products[s] = f(sigma) * f(tau);
  });
  return summarize(products, N * xi(dot_n(sigma, tau)));
}

CovarianceEstimate euclidean_covariance(const CorrelationFunction& B, int N, const Vector& u, const Vector& v,
                                        long samples, int features_per_atom, std::uint64_t seed, int threads) {
  if (u.size() != N || v.size() != N) throw Error(ErrorKind::InvalidInput, "points need dimension N");
  if (samples < 2) throw Error(ErrorKind::InvalidInput, "need at least two samples");
  std::vector<double> products(samples);
  detail::parallel_for(static_cast<int>(samples), detail::thread_count(threads), [&](int s) {
    const FieldRealization f = sample_euclidean_V(B, N, features_per_atom, seed, static_cast<std::uint64_t>(s));
    products[s] = f(u) * f(v);
  });
  return summarize(products, N * B.eval(dot_n(u - v, u - v)));
}

HShiftReport h_shift_identity_check(const LatticeSpec& lat, const std::vector<FieldRealization>& fields, double h,
                                    const std::vector<Matrix>& trial_points) {
  const Matrix A = build_coupling(lat).entries;
  const Eigen::Index n = A.rows();
  if (static_cast<Eigen::Index>(fields.size()) != n) throw Error(ErrorKind::InvalidInput, "need one field per site");
  const int N = fields.front().dimension();
  for (const auto& f : fields)
    if (f.dimension() != N) throw Error(ErrorKind::InvalidInput, "fields disagree on N");
  const double mu = lat.mu;
  const double rootN = std::sqrt(static_cast<double>(N));
  const double nn = static_cast<double>(N) * static_cast<double>(n);

  auto quadratic = [&](const Matrix& u) { return 0.5 * (A.array() * (u.transpose() * u).array()).sum(); };
  auto shifted = [&](const Matrix& u, double hh) {
    Matrix w = u;
    w.row(0).array() += rootN * hh / mu;
    return w;
  };

  HShiftReport rep;
  rep.tolerance = 1e-9 * nn;
  for (const Matrix& u : trial_points) {
    if (u.rows() != N || u.cols() != n) throw Error(ErrorKind::InvalidInput, "trial points are N x |Omega|");
    // H_h(u) with the shared realization.
    double original = quadratic(u) + rootN * h * u.row(0).sum();
    for (Eigen::Index x = 0; x < n; ++x) original += fields[x](u.col(x));
    // H~ at u + s e_1 with the translated fields V_x(. - s e_1).
    const Matrix w = shifted(u, h);
    double translated = quadratic(w);
    for (Eigen::Index x = 0; x < n; ++x) {
      Vector back = w.col(x);
      back(0) -= rootN * h / mu;
      translated += fields[x](back);
    }
    rep.max_error = std::max(rep.max_error, std::abs(translated - nn * h * h / (2.0 * mu) - original));

    // Q(k) = quadratic shift minus the constant, at k h for k = 1, 2, 3, is linear in k.
    double Q[3];
    for (int k = 1; k <= 3; ++k)
      Q[k - 1] = quadratic(shifted(u, k * h)) - quadratic(u) - nn * (k * h) * (k * h) / (2.0 * mu);
    const double c2 = 0.5 * (Q[0] - 2.0 * Q[1] + Q[2]);
    const double c1 = Q[1] - Q[0] - 3.0 * c2;
    const double c0 = Q[0] - c1 - c2;
    const double expected = rootN * h * u.row(0).sum();
    rep.cross_term_error =
        std::max({rep.cross_term_error, std::abs(c0), std::abs(c2), std::abs(c1 - expected)});
    ++rep.points;
  }
  rep.passed = rep.max_error <= rep.tolerance && rep.cross_term_error <= rep.tolerance;
  return rep;
}

double spherical_log_partition(const SphericalModelSpec& spec, const std::vector<FieldRealization>& fields, int N,
                               int nodes, double max_points) {
  validate(spec);
  const Eigen::Index n = spec.sites();
  if (N != 2 && N != 3) throw Error(ErrorKind::InvalidInput, "free-energy quadrature needs N = 2 or 3");
  if (n > 2) throw Error(ErrorKind::BudgetExceeded, "free-energy quadrature needs |Omega| <= 2");
  if (nodes < 2) throw Error(ErrorKind::InvalidInput, "need at least two quadrature nodes");
  if (!fields.empty() && static_cast<Eigen::Index>(fields.size()) != n)
    throw Error(ErrorKind::InvalidInput, "need one field per site or none");
  const SpherePoints sp = sphere_points(N, nodes);
  const auto m = static_cast<Eigen::Index>(sp.points.size());
  if (std::pow(static_cast<double>(m), static_cast<double>(n)) > max_points)
    throw Error(ErrorKind::BudgetExceeded, "angular grid exceeds the point budget");

  const double rootN = std::sqrt(static_cast<double>(N));
  // Single-site exponent including the diagonal coupling (u_x, u_x) = N.
  std::vector<std::vector<double>> single(n, std::vector<double>(m));
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index j = 0; j < m; ++j) {
      const Vector& s = sp.points[j];
      double e = sp.log_weights[j] - 0.5 * spec.D(x, x) * N - rootN * spec.h(x) * s(0);
      if (!fields.empty()) e -= fields[x](s);
      single[x][j] = e;
    }

  double mx = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  auto push = [&](double a) {
    if (a <= mx) {
      sum += std::exp(a - mx);
    } else {
      sum = sum * std::exp(mx - a) + 1.0;
      mx = a;
    }
  };
  if (n == 1) {
    for (Eigen::Index j = 0; j < m; ++j) push(single[0][j]);
  } else {
    const double d01 = spec.D(0, 1);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index l = 0; l < m; ++l)
        push(single[0][j] + single[1][l] - d01 * sp.points[j].dot(sp.points[l]));
  }
  return (mx + std::log(sum)) / (static_cast<double>(N) * static_cast<double>(n));
}

FreeEnergyEstimate free_energy_quadrature(const SphericalModelSpec& spec, const FreeEnergyOptions& opt) {
  validate(spec);
  if (opt.draws < 2) throw Error(ErrorKind::InvalidInput, "need at least two draws");
  const Eigen::Index n = spec.sites();
  FreeEnergyEstimate est;
  est.deterministic = spherical_log_partition(spec, {}, opt.N, opt.nodes, opt.max_points);
  double xi_mean = 0.0;
  for (const auto& xi : spec.xi) xi_mean += xi(1.0);
  est.annealed = est.deterministic + 0.5 * xi_mean / static_cast<double>(n);
  est.points = static_cast<long>(std::llround(std::pow(static_cast<double>(sphere_points(opt.N, opt.nodes).points.size()),
                                                       static_cast<double>(n))));

  est.per_draw.assign(opt.draws, 0.0);
  detail::parallel_for(opt.draws, detail::thread_count(opt.threads), [&](int d) {
    std::vector<FieldRealization> fields(n);
    for (Eigen::Index x = 0; x < n; ++x) {
      auto rng = make_rng(opt.seed, RngTag::FreeEnergy, static_cast<std::uint64_t>(d) * n + x);
      fields[x].kind = FieldKind::Spherical;
      fields[x].seed = opt.seed;
      fields[x].index = static_cast<std::uint64_t>(d) * n + x;
      fields[x].spherical = draw_spherical_field(spec.xi[x], opt.N, rng);
    }
    est.per_draw[d] = spherical_log_partition(spec, fields, opt.N, opt.nodes, opt.max_points);
  });
  const double S = static_cast<double>(opt.draws);
  double mean = 0.0;
  for (double v : est.per_draw) mean += v;
  mean /= S;
  double sq = 0.0;
  for (double v : est.per_draw) sq += (v - mean) * (v - mean);
  est.mean = mean;
  est.log_z_variance = sq / (S - 1.0);
  est.standard_error = std::sqrt(est.log_z_variance / S);
  est.jensen_allowance = 0.5 * static_cast<double>(opt.N) * static_cast<double>(n) * est.log_z_variance;
  return est;
}

double annealed_limit(const EuclideanModelSpec& spec) {
  validate(spec);
  const EuclideanModelSpec r = reparameterize_beta(spec);
  const Matrix A = build_coupling(r.lattice).entries;
  const double n = static_cast<double>(A.rows());
  return 0.5 * r.B.at_zero() + 0.5 * std::log(2.0 * std::numbers::pi) - logdet_pd(A) / (2.0 * n) +
         r.h * r.h / (2.0 * r.lattice.mu);
}

}  // namespace elman
