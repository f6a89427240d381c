#include <cmath>
#include <numbers>

#include "elman/lattice.hpp"
#include "elman/montecarlo.hpp"
#include "support.hpp"

using namespace elman;

namespace {

SphericalModelSpec model(Matrix D, std::vector<double> coeffs, Vector h) {
  SphericalModelSpec s;
  s.xi.assign(D.rows(), MixingFunction{std::move(coeffs)});
  s.D = std::move(D);
  s.h = std::move(h);
  return s;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_SUITE("montecarlo") {
  TEST_CASE("degree-one field is linear") {
    const FieldRealization f = sample_spherical_H(MixingFunction{{0, 0.7}}, 5, 3);
    const Vector s = Vector::LinSpaced(5, -1.0, 1.0), t = Vector::LinSpaced(5, 0.5, -0.3);
    CHECK_NEAR(f(s) + f(t), f(s + t), 1e-13);
    CHECK_NEAR(f(-s), -f(s), 1e-13);
  }

  TEST_CASE("spherical covariance within four standard errors") {
    const MixingFunction xi{{0, 0, 1}};
    const Vector s = vec({1, 1, 1, 1}), t = vec({1, 1, 1, -1});
    const CovarianceEstimate cross = spherical_covariance(xi, 4, s, t, 10000, 1, 1);
    CHECK_NEAR(cross.target, 4 * 0.25, 1e-15);
    CHECK(std::abs(cross.z_score) < 4.0);
    const CovarianceEstimate var = spherical_covariance(xi, 4, s, s, 10000, 1, 1);
    CHECK_NEAR(var.target, 4.0, 1e-15);
    CHECK(std::abs(var.z_score) < 4.0);
  }

  TEST_CASE("constant Euclidean component") {
    CorrelationFunction B;
    B.c0 = 0.8;
    const FieldRealization f = sample_euclidean_V(B, 3, 16, 5);
    CHECK(f(Vector::Zero(3)) == f(Vector::LinSpaced(3, -2.0, 4.0)));
    const CovarianceEstimate c = euclidean_covariance(B, 3, Vector::Zero(3), Vector::Ones(3), 10000, 16, 5, 1);
    CHECK_NEAR(c.target, 0.8 * 3, 1e-15);
    CHECK(std::abs(c.z_score) < 4.0);
  }

  TEST_CASE("Euclidean covariance and isotropy") {
    CorrelationFunction B;
    B.atoms = {{1.0, 1.0}};
    const int N = 4;
    // ||u - v||_N^2 = |u - v|^2 / N = 1.
    const CovarianceEstimate axis = euclidean_covariance(B, N, Vector::Zero(N), vec({2, 0, 0, 0}), 10000, 10000, 7, 1);
    CHECK_NEAR(axis.target, N * std::exp(-1.0), 1e-14);
    CHECK(std::abs(axis.z_score) < 4.0);
    const CovarianceEstimate diag = euclidean_covariance(B, N, Vector::Zero(N), vec({1, 1, 1, 1}), 10000, 10000, 8, 1);
    const double se = std::hypot(axis.standard_error, diag.standard_error);
    CHECK(std::abs(axis.mean - diag.mean) < 4.0 * se);
  }

  TEST_CASE("field shift identity") {
    LatticeSpec lat{2, 1, 1.3, 0.4};
    CorrelationFunction B;
    B.c0 = 0.2;
    B.atoms = {{0.5, 1.0}};
    const int N = 8;
    std::vector<FieldRealization> fields{sample_euclidean_V(B, N, 256, 9, 0), sample_euclidean_V(B, N, 256, 9, 1)};
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<Matrix> points;
    for (int k = 0; k < 100; ++k) points.push_back(Matrix::NullaryExpr(N, 2, [&] { return u(rng); }));
    const HShiftReport zero = h_shift_identity_check(lat, fields, 0.0, points);
    CHECK(zero.max_error == 0.0);
    const HShiftReport rep = h_shift_identity_check(lat, fields, 0.7, points);
    CHECK(rep.passed);
    CHECK(rep.max_error < 1e-9 * N * 2);
    CHECK(rep.cross_term_error < 1e-9 * N * 2);
  }

  TEST_CASE("deterministic quadrature against closed forms") {
    // Diagonal D only shifts by -mean(D_xx)/2; the field term averages exp(-N h cos) over the sphere.
    const auto free = model(Matrix::Zero(2, 2), {0.0}, Vector::Zero(2));
    Matrix D = Matrix::Zero(2, 2);
    D.diagonal() << 0.4, 1.0;
    const Vector h = vec({0.3, -0.2});
    for (int N : {2, 3}) {
      const int nodes = N == 2 ? 48 : 16;
      const double base = spherical_log_partition(free, {}, N, nodes);
      const double coupled = spherical_log_partition(model(D, {0.0}, Vector::Zero(2)), {}, N, nodes);
      CHECK(std::abs(coupled - base + 0.35) / std::abs(coupled) < 1e-8);
      const double field = spherical_log_partition(model(Matrix::Zero(2, 2), {0.0}, h), {}, N, nodes);
      double want = 0.0;
      for (int x = 0; x < 2; ++x) {
        const double a = N * std::abs(h(x));
        want += N == 2 ? std::log(std::cyl_bessel_i(0.0, a)) : std::log(std::sinh(a) / a);
      }
      CHECK(std::abs(field - base - want / (2.0 * N)) / std::abs(field) < 1e-8);
    }
  }

  TEST_CASE("free energy demo at weak disorder") {
    FreeEnergyOptions opt;
    opt.draws = 200;
    opt.threads = 1;
    const auto spec = model(Matrix::Constant(1, 1, 0.5), {0, 0.01, 0.01}, Vector::Zero(1));
    const FreeEnergyEstimate est = free_energy_quadrature(spec, opt);
    CHECK(std::abs(est.mean - est.annealed) < 3.0 * est.standard_error + est.jensen_allowance);
    CHECK(est.mean <= est.annealed + 3.0 * est.standard_error);

    // Common draws: an added PSD penalty lowers every log Z.
    Matrix D = Matrix::Constant(2, 2, 0.2);
    D.diagonal().array() += 0.3;
    const auto base = model(Matrix::Zero(2, 2), {0, 0.2}, Vector::Zero(2));
    const auto penalized = model(D, {0, 0.2}, Vector::Zero(2));
    opt.draws = 20;
    opt.nodes = 24;
    const FreeEnergyEstimate a = free_energy_quadrature(base, opt), b = free_energy_quadrature(penalized, opt);
    CHECK(b.mean < a.mean);
    for (std::size_t i = 0; i < a.per_draw.size(); ++i) CHECK(b.per_draw[i] < a.per_draw[i]);
  }

  TEST_CASE("annealed limit") {
    EuclideanModelSpec e;
    e.lattice = {1, 1, 1.7, 0.4};
    CHECK_NEAR(annealed_limit(e), 0.5 * std::log(2 * std::numbers::pi / 1.7), 1e-15);

    e.lattice = {2, 1, 0.9, 0.6};
    e.h = 0.3;
    e.B.c0 = 0.2;
    e.B.atoms = {{0.5, 1.0}};
    const Matrix C = build_coupling(e.lattice).entries;
    const double dense = 0.7 / 2 + 0.5 * std::log(2 * std::numbers::pi) -
                         std::log(C.determinant()) / 4 + 0.09 / (2 * 0.9);
    CHECK(std::abs(annealed_limit(e) - dense) / std::abs(dense) < 1e-12);

    EuclideanModelSpec shifted = e;
    shifted.B.c0 += 0.25;
    // E V^2 = N B(0): the constant component enters log E Z through B(0)/2.
    CHECK_NEAR(annealed_limit(shifted) - annealed_limit(e), 0.125, 1e-14);
  }
}
