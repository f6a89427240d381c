#include <cmath>

#include "elman/error.hpp"
#include "elman/functionals.hpp"
#include "elman/rpc.hpp"
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

PanchenkoProfile one_level(Eigen::Index n, double t0) {
  PanchenkoProfile p;
  p.t = {t0, 1.0};
  p.q.resize(n, 0);
  return p;
}

}  // namespace

TEST_SUITE("rpc") {
  TEST_CASE("linear leaf gives the Gaussian moment generating function") {
    RecursionSpec spec;
    spec.t = {1.0};
    spec.variance = Matrix::Zero(1, 2);
    spec.variance(0, 1) = 0.7;
    spec.origin = Vector::Zero(1);
    spec.leaf = [](const Vector& z) { return z(0); };
    CHECK_NEAR(evaluate_recursion(spec).value, 0.35, 1e-13);
  }

  TEST_CASE("two-level cascade of a linear leaf") {
    // F_0(v) = v + t_1 s2/2 + s1 t_0/2 ... folded by hand: each level adds t_k sigma_k^2 / 2.
    RecursionSpec spec;
    spec.t = {0.4, 0.8};
    spec.variance = Matrix::Zero(1, 3);
    spec.variance << 0.3, 0.5, 0.9;
    spec.origin = Vector::Constant(1, 0.2);
    spec.leaf = [](const Vector& z) { return z(0); };
    CHECK_NEAR(evaluate_recursion(spec).value, 0.2 + 0.4 * 0.5 / 2 + 0.8 * 0.9 / 2, 1e-13);
  }

  TEST_CASE("quadratic leaf reproduces Y^b") {
    const auto spec = model(Matrix::Zero(1, 1), {0, 0.2, 0.3}, Vector::Constant(1, 0.3));
    const PanchenkoProfile p = one_level(1, 0.5);
    const Vector b = step_d(to_steps(p), spec.xi).col(0) + Vector::Constant(1, 2.0);
    const double closed = y_b_closed_form(spec, p, b, spec.h);
    const RecursionResult num = y_b_numeric(spec, p, b, spec.h);
    CHECK(std::abs(num.value - closed) / std::abs(closed) < 1e-6);
  }

  TEST_CASE("cascade field leaf reproduces Gamma_2") {
    const auto spec = model(Matrix::Zero(2, 2), {0, 0.2, 0.5}, Vector::Zero(2));
    PanchenkoProfile p;
    p.t = {0.3, 0.7, 1.0};
    p.q.resize(2, 1);
    p.q << 0.4, 0.6;
    const double closed = gamma2_closed_form(spec, p);
    for (int M : {1, 2}) CHECK(std::abs(gamma2_numeric(spec, p, M).value - closed) / closed < 1e-6);
  }

  TEST_CASE("Monte Carlo fallback agrees with quadrature") {
    const auto spec = model(Matrix::Zero(1, 1), {0, 0.2, 0.3}, Vector::Constant(1, 0.3));
    const PanchenkoProfile p = one_level(1, 0.5);
    const Vector b = step_d(to_steps(p), spec.xi).col(0) + Vector::Constant(1, 2.0);
    RecursionOptions mc;
    mc.method = RecursionMethod::MonteCarlo;
    mc.samples = 100000;
    const RecursionResult r = y_b_numeric(spec, p, b, spec.h, mc);
    CHECK(r.method == RecursionMethod::MonteCarlo);
    CHECK(std::abs(r.value - y_b_closed_form(spec, p, b, spec.h)) < 5.0 * r.error + 1e-12);
  }

  TEST_CASE("work budget") {
    const auto spec = model(Matrix::Zero(3, 3), {0, 0.2, 0.3}, Vector::Zero(3));
    PanchenkoProfile p;
    p.t = {0.3, 0.7, 1.0};
    p.q = Matrix::Constant(3, 1, 0.5);
    const Vector b = step_d(to_steps(p), spec.xi).col(0) + Vector::Constant(3, 2.0);
    RecursionOptions tiny;
    tiny.max_work = 10.0;
    CHECK_THROWS_AS(y_b_numeric(spec, p, b, spec.h, tiny), Error);
  }

  TEST_CASE("Gamma_1 for one spin without disorder is log 2") {
    const auto spec = model(Matrix::Zero(1, 1), {0.0}, Vector::Zero(1));
    CHECK_NEAR(gamma1_small_M(spec, one_level(1, 0.5), 1).value, std::log(2.0), 1e-13);
  }

  TEST_CASE("A_M trend table") {
    const auto spec = model(Matrix::Constant(1, 1, 0.5), {0, 0.1, 0.2}, Vector::Constant(1, 0.3));
    const AMTrend trend = a_m_trend(spec, one_level(1, 0.4));
    REQUIRE(trend.rows.size() == 2);
    for (const AMRow& r : trend.rows) {
      CHECK(std::isfinite(r.value));
      CHECK_NEAR(r.value, r.gamma1 - r.gamma2, 1e-15);
    }
    CHECK_NEAR(trend.a_limit, trend.w_inf - trend.rows[0].gamma2, 1e-15);
    const WMinimum w = minimize_w(spec, one_level(1, 0.4));
    CHECK(w.gradient < 1e-6);
    CHECK_NEAR(w.value, trend.w_inf, 1e-12);
  }
}
