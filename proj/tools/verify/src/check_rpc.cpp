#include <cmath>
#include <string>

#include "checks.hpp"
#include "elman/functionals.hpp"
#include "elman/rpc.hpp"
#include "elman/verify/instances.hpp"

namespace elman::verify::detail {

namespace {

std::string label(int i, int n, int r) {
  return "instance " + std::to_string(i) + " (n=" + std::to_string(n) + ", r=" + std::to_string(r) + ")";
}

}  // namespace

std::vector<CriterionResult> check_y_b(const Context& ctx) {
  Tally t = ctx.tally("AC-10");
  SphericalShape shape;
  shape.coupling = 0.3;
  shape.mixing.degree = 3;
  shape.mixing.max_coefficient = 0.25;
  RecursionOptions opt;
  opt.threads = ctx.options.threads;
  for (int i = 0; i < 10; ++i) {
    const int n = 1 + i % 2, r = 1 + i % 3;
    auto rng = ctx.rng(10, i);
    const std::string name = label(i, n, r);
    try {
      const SphericalModelSpec spec = random_spherical(n, rng, shape);
      const PanchenkoProfile p = random_panchenko(n, r, rng);
      const Vector d0 = step_d(to_steps(p), spec.xi).col(0);
      Vector b(n);
      for (int x = 0; x < n; ++x) b(x) = d0(x) + uniform(rng, 1.5, 2.5);
      const double closed = y_b_closed_form(spec, p, b, spec.h);
      const RecursionResult num = y_b_numeric(spec, p, b, spec.h, opt);
      t.add(relative_error(closed, num.value), name);
    } catch (const std::exception& e) {
      t.error(name, e.what());
    }
  }
  return {t.result()};
}

std::vector<CriterionResult> check_gamma2(const Context& ctx) {
  Tally t = ctx.tally("AC-11");
  RecursionOptions opt;
  opt.threads = ctx.options.threads;
  for (int i = 0; i < 10; ++i) {
    const int n = 1 + i % 3, r = 1 + (i / 3) % 3, M = 1 + i % 2;
    auto rng = ctx.rng(11, i);
    const std::string name = label(i, n, r) + " M=" + std::to_string(M);
    try {
      const SphericalModelSpec spec = random_spherical(n, rng);
      const PanchenkoProfile p = random_panchenko(n, r, rng);
      const double closed = gamma2_closed_form(spec, p);
      const RecursionResult num = gamma2_numeric(spec, p, M, opt);
      t.add(relative_error(closed, num.value), name);
    } catch (const std::exception& e) {
      t.error(name, e.what());
    }
  }
  return {t.result()};
}

}  // namespace elman::verify::detail
