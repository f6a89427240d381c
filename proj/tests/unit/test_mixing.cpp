#include <cmath>

#include "elman/error.hpp"
#include "elman/mixing.hpp"
#include "support.hpp"

using namespace elman;

namespace {

MixingFunction mix(std::vector<double> c) { return MixingFunction{std::move(c)}; }

}  // namespace

TEST_SUITE("mixing") {
  TEST_CASE("xi and its derivatives") {
    CHECK_NEAR(xi_eval(mix({0, 0, 1}), 0.5, 1), 1.0, 1e-15);
    CHECK_NEAR(xi_eval(mix({1, 0, 0, 1}), 1.0, 0), 2.0, 1e-15);
    const MixingFunction xi = mix({0.1, 0.3, 0.5, 0.2, 0.4});
    for (int order = 0; order < 2; ++order) {
      const double h = 1e-5, r = 0.3;
      const double fd = (xi_eval(xi, r + h, order) - xi_eval(xi, r - h, order)) / (2 * h);
      CHECK(std::abs(fd - xi_eval(xi, r, order + 1)) / std::abs(xi_eval(xi, r, order + 1)) < 1e-7);
    }
  }

  TEST_CASE("theta") {
    const MixingFunction sq = mix({0, 0, 1});
    for (double r : {0.0, 0.3, 0.9}) CHECK_NEAR(theta(sq, r), r * r, 1e-15);
    CHECK(theta(mix({0.2, 0.7, 0.1}), 0.0) == 0.0);
    const MixingFunction xi = mix({0, 0, 0.5, 0.25});
    const double h = 1e-5, r = 0.4;
    const double fd = (theta(xi, r + h) - theta(xi, r - h)) / (2 * h);
    CHECK(std::abs(fd - r * xi_eval(xi, r, 2)) / (r * xi_eval(xi, r, 2)) < 1e-7);
  }

  TEST_CASE("correlation function") {
    CorrelationFunction b;
    b.atoms = {{1.0, 1.0}};
    CHECK_NEAR(b_eval(b, 0.0, 0), 1.0, 1e-15);
    CHECK_NEAR(b_eval(b, 0.0, 1), -1.0, 1e-15);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int k = 0; k < 10; ++k) {
      CorrelationFunction r;
      r.c0 = u(rng);
      double total = r.c0;
      for (int a = 0; a < 3; ++a) {
        r.atoms.emplace_back(u(rng), u(rng) + 0.1);
        total += r.atoms.back().first;
      }
      CHECK_NEAR(b_eval(r, 0.0, 0), total, 1e-14);
    }
  }

  TEST_CASE("spherical restriction of one atom") {
    CorrelationFunction b;
    b.atoms = {{1.0, 1.0}};
    // B(2q(1-r)) = exp(r - 1) at q = 1/2.
    const Restriction res = spherical_restriction(b, 0.5, 30, 1e-12);
    double factorial = 1.0;
    for (int p = 0; p <= 12; ++p) {
      if (p > 0) factorial *= p;
      CHECK_NEAR(res.xi.coeffs[p], std::exp(-1.0) / factorial, 1e-15);
    }
  }

  TEST_CASE("spherical restriction of a constant") {
    CorrelationFunction b;
    b.c0 = 2.0;
    const Restriction res = spherical_restriction(b, 0.7, 10, 1e-12);
    CHECK(res.xi.coeffs[0] == 2.0);
    for (std::size_t p = 1; p < res.xi.coeffs.size(); ++p) CHECK(res.xi.coeffs[p] == 0.0);
  }

  TEST_CASE("restriction matches direct evaluation within the tail bound") {
    CorrelationFunction b;
    b.c0 = 0.3;
    b.atoms = {{0.5, 1.2}, {0.4, 0.6}};
    const double q = 0.8;
    const Restriction res = spherical_restriction_adaptive(b, q, 1e-13);
    for (double r : {0.0, 0.5, 1.0})
      CHECK(std::abs(xi_eval(res.xi, r, 0) - b_eval(b, 2 * q * (1 - r), 0)) <= res.tail_bound + 1e-15);
    CHECK_THROWS_AS(spherical_restriction(b, 5.0, 3, 1e-12), Error);
  }

  TEST_CASE("continuity bound") {
    const std::vector<MixingFunction> a{mix({0, 0, 1})};
    CHECK(continuity_bound(a, a) == 0.0);
    CHECK_NEAR(continuity_bound(a, {mix({0, 0, 2})}), 0.5, 1e-15);
    const std::vector<MixingFunction> two{mix({0, 0.2, 0.5}), mix({0, 0.1, 0.3})};
    std::vector<MixingFunction> moved = two;
    moved[1].coeffs[2] += 0.4;
    CHECK_NEAR(continuity_bound(two, moved), 0.1, 1e-15);
  }

  TEST_CASE("validation rejects negative weights") {
    CHECK_THROWS_AS(validate(mix({0, -0.1})), Error);
    CorrelationFunction b;
    b.atoms = {{-1.0, 1.0}};
    CHECK_THROWS_AS(validate(b), Error);
  }
}
