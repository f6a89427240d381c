#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "elman/functionals.hpp"
#include "elman/kdual.hpp"
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

OptimizeOptions quick() {
  OptimizeOptions o;
  o.multistart = 4;
  o.threads = 1;
  return o;
}

}  // namespace

TEST_SUITE("optimize") {
  TEST_CASE("b minimizer without mixing") {
    // A = (1/2)(b + log 2 pi - log b) at one decoupled site.
    const auto spec = model(Matrix::Zero(1, 1), {0.0}, Vector::Zero(1));
    const BSolution s = minimize_b(spec, rs(1, 0.0));
    CHECK_NEAR(s.b(0), 1.0, 1e-9);
    CHECK_NEAR(s.value, 0.5 * (1.0 + kLog2Pi), 1e-12);
  }

  TEST_CASE("b minimizer against a scalar search") {
    const auto spec = model(Matrix::Zero(1, 1), {0, 0, 1}, Vector::Zero(1));
    const TalagrandProfile p = rs(1, 0.0);
    const BSolution s = minimize_b(spec, p);
    CHECK(s.residual < 1e-10);
    const double d1 = d_sequence(p, spec.xi).level(1)(0);
    auto f = [&](double b) { return eval_A_discrete(spec, p, Vector::Constant(1, b)).value; };
    const auto [b_star, value] = boost::math::tools::brent_find_minima(f, d1 + 1e-6, d1 + 20.0, 50);
    CHECK_NEAR(s.b(0), b_star, 1e-6);
    CHECK_NEAR(s.value, value, 1e-12);
  }

  TEST_CASE("A is strictly convex at the b minimizer") {
    std::mt19937_64 rng(31);
    const auto spec = model(test::random_psd(2, rng), {0, 0.2, 0.5}, Vector::LinSpaced(2, 0.1, 0.3));
    TalagrandProfile p;
    p.m = {0.0, 0.5, 1.0};
    p.s.resize(2, 2);
    p.s << 0.2, 0.6, 0.3, 0.5;
    const BSolution s = minimize_b(spec, p);
    const double h = 1e-4;
    Matrix H(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        auto f = [&](double a, double c) {
          Vector b = s.b;
          b(i) += a;
          b(j) += c;
          return eval_A_discrete(spec, p, b).value;
        };
        H(i, j) = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
      }
    CHECK(H.determinant() > 0.0);
    CHECK(H(0, 0) > 0.0);
  }

  TEST_CASE("replica-symmetric s against a scalar search") {
    const auto spec = model(Matrix::Zero(1, 1), {0, 0.1, 0.3}, Vector::Constant(1, 0.4));
    const ProfileSolution sol = minimize_s(spec, rs(1, 0.5), Target::B, quick());
    auto f = [&](double s) { return eval_B_discrete(spec, rs(1, s)).value; };
    const auto [s_star, value] = boost::math::tools::brent_find_minima(f, 0.0, 1.0 - 1e-6, 50);
    CHECK_NEAR(sol.talagrand.s(0, 0), s_star, 1e-6);
    CHECK_NEAR(sol.cert.value, value, 1e-12);
  }

  TEST_CASE("certificates at fixed-weight minimizers") {
    std::mt19937_64 rng(32);
    for (int n = 1; n <= 3; ++n) {
      const auto spec = model(test::random_psd(n, rng) * 0.5, {0, 0.3, 2.0, 0.0, 1.0}, Vector::Constant(n, 0.3));
      TalagrandProfile p;
      p.m = {0.0, 0.4, 0.8, 1.0};
      p.s = Matrix::Zero(n, 3);
      for (int x = 0; x < n; ++x) p.s.row(x) << 0.2, 0.5, 0.8;
      const ProfileSolution sol = minimize_s(spec, p, Target::B, quick());
      CHECK(sol.cert.residual_cs1 < 1e-6);
      CHECK(sol.cert.residual_csb < 1e-6);
      CHECK(sol.cert.gap_AB < 1e-6);
      // boundary_gap is nonnegative on the support at a minimizer.
      const Vector g = boundary_gap(spec, talagrand_to_continuum(sol.talagrand));
      CHECK(g.minCoeff() >= -1e-6);
    }
  }

  TEST_CASE("no mixing: the infimum is the entropy term at every depth") {
    std::mt19937_64 rng(33);
    const Matrix D = test::random_psd(2, rng);
    const auto spec = model(D, {0.0}, Vector::Zero(2));
    const double want = 0.5 * (kLog2Pi + lambda(D, Vector::Ones(2)));
    for (int r = 1; r <= 2; ++r) CHECK_NEAR(minimize_full(spec, r, Target::B, Parameterization::Talagrand, quick()).best.cert.value, want, 1e-9);
    const Vector g = boundary_gap(spec, talagrand_to_continuum(rs(2, 0.4)));
    CHECK(g.maxCoeff() < 0.0);
  }

  TEST_CASE("depth does not change a replica-symmetric optimum") {
    const auto spec = model(Matrix::Constant(1, 1, 0.5), {0, 0.05, 0.1}, Vector::Constant(1, 0.3));
    const double r1 = minimize_full(spec, 1, Target::B, Parameterization::Talagrand, quick()).best.cert.value;
    const double r2 = minimize_full(spec, 2, Target::B, Parameterization::Talagrand, quick()).best.cert.value;
    CHECK_NEAR(r1, r2, 2e-6);
  }

  TEST_CASE("ladder values are nonincreasing") {
    const auto spec = model(Matrix::Constant(1, 1, 0.3), {0, 0.1, 2.0, 0.0, 1.5}, Vector::Constant(1, 0.2));
    const std::vector<FullSolution> ladder = minimize_ladder(spec, 3, Target::B, quick());
    REQUIRE(ladder.size() == 3);
    for (std::size_t r = 1; r < ladder.size(); ++r)
      CHECK(ladder[r].best.cert.value <= ladder[r - 1].best.cert.value + 1e-12);
    const TalagrandProfile e = embed_next_level(ladder[0].best.talagrand);
    CHECK(e.levels() == 2);
    CHECK_NEAR(eval_B_discrete(spec, e).value, ladder[0].best.cert.value, 1e-12);
  }

  TEST_CASE("disorder-free Euclidean sup is at q = 1/mu") {
    EuclideanModelSpec e;
    e.lattice = {1, 1, 1.6, 0.5};
    e.h = 0.2;
    SupOptions opt;
    opt.inner = quick();
    const SupSolution sol = sup_over_q(e, opt);
    CHECK_NEAR(sol.q(0), 1.0 / 1.6, 1e-6);
    const double h = 1e-4;
    const double slope = (inner_value(e, Vector::Constant(1, sol.q(0) + h), opt) -
                          inner_value(e, Vector::Constant(1, sol.q(0) - h), opt)) / (2 * h);
    CHECK(std::abs(slope) < 1e-6);
  }

  TEST_CASE("one-site sup is stable under grid refinement") {
    EuclideanModelSpec e;
    e.lattice = {1, 1, 1.0, 0.5};
    e.B.atoms = {{0.6, 1.0}};
    e.h = 0.1;
    SupOptions coarse;
    coarse.inner = quick();
    coarse.grid = 7;
    SupOptions fine = coarse;
    fine.grid = 14;
    CHECK_NEAR(sup_over_q(e, coarse).value, sup_over_q(e, fine).value, 1e-5);
  }

  TEST_CASE("translation invariance makes q* constant") {
    EuclideanModelSpec e;
    e.lattice = {3, 1, 1.2, 0.3};
    e.B.atoms = {{0.4, 1.0}};
    SupOptions opt;
    opt.inner = quick();
    opt.inner.multistart = 2;
    const SupSolution sol = sup_over_q(e, opt);
    CHECK((sol.q.array() - sol.q.mean()).abs().maxCoeff() < 1e-6);
  }
}
