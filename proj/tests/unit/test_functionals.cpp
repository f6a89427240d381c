#include <cmath>
#include <numbers>

#include "elman/functionals.hpp"
#include "elman/kdual.hpp"
#include "elman/lattice.hpp"
#include "elman/optimize.hpp"
#include "support.hpp"

using namespace elman;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

SphericalModelSpec model(Matrix D, std::vector<double> coeffs, Vector h) {
  SphericalModelSpec s;
  s.xi.assign(D.rows(), MixingFunction{std::move(coeffs)});
  s.D = std::move(D);
  s.h = std::move(h);
  return s;
}

TalagrandProfile rs(Eigen::Index n, double s1) {
  TalagrandProfile p;
  p.m = {0.0, 1.0};
  p.s = Matrix::Constant(n, 1, s1);
  return p;
}

PanchenkoProfile one_level(Eigen::Index n, double t0) {
  PanchenkoProfile p;
  p.t = {t0, 1.0};
  p.q.resize(n, 0);
  return p;
}

EuclideanModelSpec euclidean(int L, double mu, double t, double h, double beta) {
  EuclideanModelSpec e;
  e.lattice = {L, 1, mu, t};
  e.B.c0 = 0.1;
  e.B.atoms = {{0.5, 1.0}, {0.3, 1.7}};
  e.h = h;
  e.beta = beta;
  return e;
}

}  // namespace

TEST_SUITE("functionals") {
  TEST_CASE("replica-symmetric B at the origin") {
    const auto spec = model(Matrix::Zero(1, 1), {0, 0, 1}, Vector::Zero(1));
    CHECK_NEAR(eval_B_discrete(spec, rs(1, 0.0)).value, 0.5 * (kLog2Pi + 2.0), 1e-12);
    CHECK_NEAR(0.5 * (kLog2Pi + 2.0), 1.91894, 1e-5);
  }

  TEST_CASE("discrete B matches the continuum quadrature") {
    const auto spec = model(Matrix::Zero(1, 1), {0, 0, 1}, Vector::Zero(1));
    const TalagrandProfile p = rs(1, 0.5);
    CHECK_NEAR(eval_B_discrete(spec, p).value, eval_B_continuum(spec, talagrand_to_continuum(p)).value, 1e-10);

    std::mt19937_64 rng(21);
    Matrix D = test::random_psd(3, rng);
    auto coupled = model(D, {0, 0.2, 0.6, 0.3}, Vector::LinSpaced(3, -0.4, 0.5));
    TalagrandProfile q;
    q.m = {0.0, 0.35, 0.8, 1.0};
    q.s.resize(3, 3);
    q.s << 0.1, 0.4, 0.8, 0.2, 0.5, 0.6, 0.0, 0.3, 0.9;
    CHECK_NEAR(eval_B_discrete(coupled, q).value, eval_B_continuum(coupled, talagrand_to_continuum(q)).value, 1e-8);
  }

  TEST_CASE("zero mixing leaves the entropy term") {
    std::mt19937_64 rng(22);
    const Matrix D = test::random_psd(2, rng);
    const auto spec = model(D, {0.0}, Vector::Zero(2));
    CHECK_NEAR(eval_B_discrete(spec, rs(2, 0.0)).value, 0.5 * (kLog2Pi + lambda(D, Vector::Ones(2))), 1e-12);
    // inf over b of A reproduces B.
    const BSolution b = minimize_b(spec, rs(2, 0.0));
    CHECK_NEAR(b.value, eval_B_discrete(spec, rs(2, 0.0)).value, 1e-8);
  }

  TEST_CASE("discrete A matches the continuum quadrature") {
    const auto spec = model(Matrix::Zero(1, 1), {0, 0, 1}, Vector::Zero(1));
    // d^1 = 2 at s^1 = 0, so b must exceed 2.
    const Vector b = Vector::Constant(1, 2.5);
    CHECK_NEAR(eval_A_discrete(spec, rs(1, 0.0), b).value,
               eval_A_continuum(spec, talagrand_to_continuum(rs(1, 0.0)), b).value, 1e-8);
    PanchenkoProfile p;
    p.t = {0.3, 0.7, 1.0};
    p.q = Matrix::Constant(1, 1, 0.4);
    const Vector b2 = Vector::Constant(1, 3.0);
    CHECK_NEAR(eval_A_discrete(spec, p, b2).value, eval_A_continuum(spec, panchenko_to_continuum(p), b2).value, 1e-8);
  }

  TEST_CASE("mapped and direct P agree") {
    for (int L = 1; L <= 3; ++L) {
      const EuclideanModelSpec e = euclidean(L, 0.9, 0.4, 0.2, 1.0);
      const Vector q = Vector::LinSpaced(L, 0.6, 1.3);
      TalagrandProfile p;
      p.m = {0.0, 0.5, 1.0};
      p.s.resize(L, 2);
      for (int x = 0; x < L; ++x) p.s.row(x) << 0.2 + 0.05 * x, 0.6 + 0.05 * x;
      const ContinuumProfile c = scale_to_caps(talagrand_to_continuum(p), q);
      CHECK_NEAR(eval_P(e, q, c, Route::Direct).value, eval_P(e, q, c, Route::Mapped).value, 1e-7);
    }
  }

  TEST_CASE("beta reparameterization") {
    const EuclideanModelSpec one = euclidean(2, 0.9, 0.4, 0.2, 1.0);
    const EuclideanModelSpec same = reparameterize_beta(one);
    CHECK(same.lattice.mu == one.lattice.mu);
    CHECK(same.h == one.h);
    CHECK(same.B.atoms[0].first == one.B.atoms[0].first);

    const EuclideanModelSpec two = reparameterize_beta(euclidean(2, 0.9, 0.4, 0.2, 2.0));
    CHECK(two.beta == 1.0);
    CHECK_NEAR(two.lattice.mu, 1.8, 1e-15);
    CHECK_NEAR(two.lattice.t, 0.8, 1e-15);
    CHECK_NEAR(two.h, 0.4, 1e-15);
    CHECK_NEAR(two.B.c0, 0.4, 1e-15);
    CHECK_NEAR(two.B.atoms[1].first, 1.2, 1e-15);
    CHECK(two.B.atoms[1].second == 1.7);

    EuclideanModelSpec half = reparameterize_beta(euclidean(2, 0.9, 0.4, 0.2, std::sqrt(2.0)));
    half.beta = std::sqrt(2.0);
    const EuclideanModelSpec twice = reparameterize_beta(half);
    CHECK_NEAR(twice.lattice.mu, two.lattice.mu, 1e-14);
    CHECK_NEAR(twice.h, two.h, 1e-14);
    CHECK_NEAR(twice.B.atoms[0].first, two.B.atoms[0].first, 1e-14);

    const EuclideanModelSpec hot = euclidean(2, 0.9, 0.4, 0.2, 1.7);
    const Vector q = Vector::LinSpaced(2, 0.7, 1.1);
    TalagrandProfile p;
    p.m = {0.0, 1.0};
    p.s = Matrix::Constant(2, 1, 0.5);
    const ContinuumProfile c = scale_to_caps(talagrand_to_continuum(p), q);
    CHECK_NEAR(eval_P(hot, q, c, Route::Direct).value, eval_P(reparameterize_beta(hot), q, c, Route::Direct).value,
               1e-12);
  }

  TEST_CASE("q_star does not matter") {
    std::mt19937_64 rng(23);
    const auto spec = model(test::random_psd(2, rng), {0, 0.3, 0.5}, Vector::Constant(2, 0.2));
    TalagrandProfile p;
    p.m = {0.0, 0.4, 1.0};
    p.s.resize(2, 2);
    p.s << 0.2, 0.5, 0.3, 0.6;
    const ContinuumProfile c = talagrand_to_continuum(p);
    const double base = eval_B_continuum(spec, c).value;
    for (double f : {0.1, 0.5, 0.9})
      CHECK_NEAR(eval_B_continuum(spec, c, 32, c.q_star + f * (c.q_total() - c.q_star)).value, base, 1e-10);
  }

  TEST_CASE("Y^b closed form") {
    // xi'(x) = x, one level with t_0 = 1/2, b = 2, v = 0.
    const auto spec = model(Matrix::Zero(1, 1), {0, 0, 0.5}, Vector::Zero(1));
    const double y = y_b_closed_form(spec, one_level(1, 0.5), Vector::Constant(1, 2.0), Vector::Zero(1));
    CHECK_NEAR(y, 0.5 * (kLog2Pi - std::log(2.0) + 2.0 * std::log(2.0 / 1.5)), 1e-13);
    CHECK_NEAR(y, 0.86005, 1e-5);
  }

  TEST_CASE("Y^b is quadratic in v with the resolvent at the first level") {
    std::mt19937_64 rng(24);
    const Matrix D = test::random_psd(2, rng);
    const auto spec = model(D, {0, 0.2, 0.4}, Vector::Zero(2));
    PanchenkoProfile p;
    p.t = {0.3, 0.7, 1.0};
    p.q.resize(2, 1);
    p.q << 0.4, 0.5;
    const Vector d0 = step_d(to_steps(p), spec.xi).col(0);
    const Vector b = d0 + Vector::Constant(2, 1.5);
    Matrix R = D;
    R.diagonal() += b - d0;
    const Matrix want = R.inverse() / 2.0;  // Hessian of the (1/2n) v^T R^{-1} v term, n = 2
    const double h = 1e-3;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        auto f = [&](double a, double c) {
          Vector v = Vector::Constant(2, 0.1);
          v(i) += a;
          v(j) += c;
          return y_b_closed_form(spec, p, b, v);
        };
        const double fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
        CHECK_NEAR(fd, want(i, j), 1e-7);
      }
  }

  TEST_CASE("Y^b without mixing is a Gaussian integral") {
    std::mt19937_64 rng(25);
    const Matrix D = test::random_psd(2, rng);
    const auto spec = model(D, {0.0}, Vector::Zero(2));
    const Vector b = Vector::Constant(2, 1.3);
    const Matrix R = D + Matrix(b.asDiagonal());
    const Vector v = Vector::LinSpaced(2, -0.3, 0.4);
    const double want = 0.5 * (kLog2Pi - logdet_pd(R) / 2.0 + v.dot(R.inverse() * v) / 2.0);
    CHECK_NEAR(y_b_closed_form(spec, one_level(2, 0.5), b, v), want, 1e-13);
  }

  TEST_CASE("W(b) adds mean(b)/2 and is convex") {
    std::mt19937_64 rng(26);
    const auto spec = model(test::random_psd(2, rng), {0, 0.2, 0.4}, Vector::LinSpaced(2, 0.1, -0.2));
    const PanchenkoProfile p = one_level(2, 0.6);
    const Vector d0 = step_d(to_steps(p), spec.xi).col(0);
    const Vector b = d0 + Vector::Constant(2, 1.0);
    CHECK(w_of_b(spec, p, b) - y_b_closed_form(spec, p, b, spec.h) == doctest::Approx(b.mean() / 2).epsilon(1e-15));
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int k = 0; k < 20; ++k) {
      const Vector b0 = d0 + Vector::NullaryExpr(2, [&] { return u(rng); });
      const Vector b1 = d0 + Vector::NullaryExpr(2, [&] { return u(rng); });
      CHECK(w_of_b(spec, p, 0.5 * (b0 + b1)) <= 0.5 * (w_of_b(spec, p, b0) + w_of_b(spec, p, b1)) + 1e-10);
    }
  }

  TEST_CASE("Gamma_2 closed form") {
    CHECK_NEAR(gamma2_closed_form(model(Matrix::Zero(1, 1), {0, 0, 1}, Vector::Zero(1)), one_level(1, 0.5)), 0.25,
               1e-15);
    CHECK(gamma2_closed_form(model(Matrix::Zero(2, 2), {0.0}, Vector::Zero(2)), one_level(2, 0.5)) == 0.0);
  }
}
