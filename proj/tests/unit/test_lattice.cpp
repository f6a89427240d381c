#include <cmath>

#include <Eigen/Eigenvalues>

#include "elman/error.hpp"
#include "elman/lattice.hpp"
#include "support.hpp"

using namespace elman;

TEST_SUITE("lattice") {
  TEST_CASE("three-site ring laplacian") {
    const Matrix lap = build_periodic_laplacian({3, 1, 1.0, 1.0});
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y) CHECK(lap(x, y) == (x == y ? -2.0 : 1.0));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(-lap);
    CHECK_NEAR(eig.eigenvalues()(0), 0.0, 1e-14);
    CHECK_NEAR(eig.eigenvalues()(1), 3.0, 1e-14);
    CHECK_NEAR(eig.eigenvalues()(2), 3.0, 1e-14);
  }

  TEST_CASE("single site has no neighbors") {
    const Matrix lap = build_periodic_laplacian({1, 3, 1.0, 1.0});
    REQUIRE(lap.rows() == 1);
    CHECK(lap(0, 0) == 0.0);
  }

  TEST_CASE("length-two axis counts both wrap edges") {
    const Matrix lap = build_periodic_laplacian({2, 1, 1.0, 1.0});
    CHECK(lap(0, 0) == -2.0);
    CHECK(lap(0, 1) == 2.0);
    CHECK(lap(1, 0) == 2.0);
    CHECK(lap(1, 1) == -2.0);
  }

  TEST_CASE("coupling mu I - t laplacian") {
    const CouplingMatrix c = build_coupling({3, 1, 1.0, 0.5});
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y) CHECK_NEAR(c.entries(x, y), x == y ? 2.0 : -0.5, 1e-15);
    CHECK(c.size() == 3);
    const CouplingMatrix one = build_coupling({1, 1, 2.0, 7.0});
    CHECK(one.entries(0, 0) == 2.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(build_coupling({4, 1, 0.3, 1.0}).entries);
    CHECK_NEAR(eig.eigenvalues().minCoeff(), 0.3, 1e-13);
  }

  TEST_CASE("site labels are row-major") {
    const SiteSet s = lattice_sites({2, 2, 1.0, 1.0});
    REQUIRE(s.size() == 4);
    CHECK(build_periodic_laplacian({2, 2, 1.0, 1.0}).diagonal().isApprox(Vector::Constant(4, -4.0)));
  }

  TEST_CASE("log determinant") {
    CHECK_NEAR(logdet_pd(Matrix::Identity(3, 3)), 0.0, 1e-15);
    CHECK_NEAR(logdet_pd(2.0 * Matrix::Identity(2, 2)), 2.0 * std::log(2.0), 1e-15);
    Matrix m(2, 2);
    m << 2, 1, 1, 2;
    CHECK_NEAR(logdet_pd(m), std::log(3.0), 1e-15);
    Matrix bad(2, 2);
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(logdet_pd(bad), Error);
  }

  TEST_CASE("inverse diagonal") {
    Vector d = inverse_diagonal(Vector(Vector::Map(std::vector<double>{2, 4}.data(), 2)).asDiagonal().toDenseMatrix());
    CHECK_NEAR(d(0), 0.5, 1e-15);
    CHECK_NEAR(d(1), 0.25, 1e-15);
    Matrix m(2, 2);
    m << 2, 1, 1, 2;
    d = inverse_diagonal(m);
    CHECK_NEAR(d(0), 2.0 / 3.0, 1e-15);
    CHECK_NEAR(d(1), 2.0 / 3.0, 1e-15);
    std::mt19937_64 rng(11);
    for (int k = 0; k < 10; ++k) {
      const Matrix a = test::random_pd(4, rng);
      CHECK((inverse_diagonal(a) - a.inverse().diagonal()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("coupling validation") {
    Matrix asym(2, 2);
    asym << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(make_coupling(asym), Error);
    CHECK_THROWS_AS(validate_lattice({0, 1, 1.0, 1.0}), Error);
    CHECK_THROWS_AS(validate_lattice({2, 1, 0.0, 1.0}), Error);
  }
}
