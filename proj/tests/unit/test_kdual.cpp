#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "elman/error.hpp"
#include "elman/kdual.hpp"
#include "support.hpp"

using namespace elman;

TEST_SUITE("kdual") {
  TEST_CASE("decoupled sites invert u") {
    Vector u(2);
    u << 0.5, 0.25;
    const DualPoint p = solve_K(Matrix::Zero(2, 2), u);
    CHECK_NEAR(p.K(0), 2.0, 1e-12);
    CHECK_NEAR(p.K(1), 4.0, 1e-12);
  }

  TEST_CASE("one site subtracts the coupling") {
    const DualPoint p = solve_K(Matrix::Ones(1, 1), Vector::Constant(1, 0.5));
    CHECK_NEAR(p.K(0), 1.0, 1e-12);
  }

  TEST_CASE("symmetric pair reduces to a quadratic") {
    Matrix D(2, 2);
    D << 1, 0.3, 0.3, 1;
    const DualPoint p = solve_K(D, Vector::Constant(2, 0.4));
    // a = 1 + k is the positive root of 0.4 a^2 - a - 0.036 = 0.
    const double a = (1.0 + std::sqrt(1.0 + 4 * 0.4 * 0.036)) / (2 * 0.4);
    CHECK_NEAR(p.K(0), a - 1.0, 1e-12);
    CHECK_NEAR(p.K(1), a - 1.0, 1e-12);
    CHECK_NEAR(p.K(0), 1.5355, 1e-4);
  }

  TEST_CASE("lambda closed forms") {
    CHECK_NEAR(lambda(Matrix::Zero(3, 3), Vector::Ones(3)), 1.0, 1e-12);
    CHECK_NEAR(lambda(Matrix::Ones(1, 1), Vector::Constant(1, 0.5)), 1.0 - 0.5 + std::log(0.5), 1e-12);
  }

  TEST_CASE("gradient of lambda is K over the site count") {
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 4; ++n) {
      const Matrix D = test::random_psd(n, rng);
      Vector u = Vector::LinSpaced(n, 0.3, 1.7);
      const DualPoint p = solve_K(D, u);
      for (int x = 0; x < n; ++x) {
        const double h = 1e-5 * u(x);
        Vector up = u, dn = u;
        up(x) += h;
        dn(x) -= h;
        const double fd = n * (lambda(D, up) - lambda(D, dn)) / (2 * h);
        CHECK(std::abs(fd - p.K(x)) / std::abs(p.K(x)) < 1e-6);
      }
    }
  }

  TEST_CASE("jacobian") {
    Vector u(3);
    u << 0.5, 0.8, 1.3;
    const Matrix J0 = grad_K(Matrix::Zero(3, 3), solve_K(Matrix::Zero(3, 3), u));
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y) CHECK_NEAR(J0(x, y), x == y ? -1.0 / (u(x) * u(x)) : 0.0, 1e-10);

    std::mt19937_64 rng(9);
    const Matrix D = test::random_psd(3, rng);
    KSolveOptions tight;
    tight.tol = 1e-13;
    const DualPoint p = solve_K(D, u, tight);
    const Matrix J = grad_K(D, p);
    CHECK((J - J.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(J).eigenvalues().maxCoeff() < 0.0);
    for (int y = 0; y < 3; ++y) {
      const double h = 1e-6 * u(y);
      Vector up = u, dn = u;
      up(y) += h;
      dn(y) -= h;
      const Vector fd = (solve_K(D, up, tight).K - solve_K(D, dn, tight).K) / (2 * h);
      CHECK((fd - J.col(y)).norm() / J.col(y).norm() < 1e-5);
    }
  }

  TEST_CASE("boundary epsilon") {
    CHECK_NEAR(boundary_diagnostics(Matrix::Zero(2, 2), 5.0, 50).epsilon, 1.0, 1e-9);
    std::mt19937_64 rng(13);
    const Matrix D = test::random_psd(2, rng);
    CHECK(boundary_diagnostics(D, 10.0, 200).epsilon > 0.0);
    // Nested samples: each larger box adds points to the previous set.
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Vector> points;
    double previous = std::numeric_limits<double>::infinity();
    for (double box : {1.0, 2.0, 5.0, 10.0}) {
      for (int k = 0; k < 50; ++k) points.push_back(box * Vector(Vector::NullaryExpr(2, [&] { return 0.01 + unif(rng); })));
      const double eps = boundary_epsilon(D, points).epsilon;
      CHECK(eps > 0.0);
      CHECK(eps <= previous);
      previous = eps;
    }
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(solve_K(Matrix::Zero(2, 2), Vector::Constant(1, 1.0)), Error);
    CHECK_THROWS_AS(solve_K(Matrix::Zero(1, 1), Vector::Constant(1, -1.0)), Error);
    try {
      solve_K(Matrix::Zero(1, 1), Vector::Constant(1, 1e-9));
      FAIL("expected NoConvergence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoConvergence);
      CHECK(!std::isnan(e.residual()));
    }
  }
}
