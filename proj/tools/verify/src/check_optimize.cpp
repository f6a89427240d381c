#include <algorithm>
#include <cmath>
#include <string>

#include "checks.hpp"
#include "elman/optimize.hpp"
#include "elman/verify/instances.hpp"

namespace elman::verify::detail {

namespace {

std::string label(int i, int n, int r) {
  return "instance " + std::to_string(i) + " (n=" + std::to_string(n) + ", r=" + std::to_string(r) + ")";
}

// Mixtures with xi'(0), xi''(0) > 0 and a quartic component strong enough to break replica symmetry.
SphericalShape glassy_shape() {
  SphericalShape shape;
  shape.coupling = 0.5;
  shape.field = 0.3;
  shape.mixing.degree = 4;
  shape.mixing.max_coefficient = 2.0;
  shape.mixing.linear_and_quadratic = true;
  return shape;
}

}  // namespace

std::vector<CriterionResult> check_minimizers(const Context& ctx) {
  Tally gap = ctx.tally("AC-5b");
  Tally crit = ctx.tally("AC-6");
  OptimizeOptions opt;
  opt.threads = ctx.options.threads;
  int i = 0;
  for (int r = 1; r <= 3; ++r)
    for (int n = 1; n <= 3; ++n)
      for (int k = 0; k < 10; ++k, ++i) {
        auto rng = ctx.rng(6, i);
        const std::string name = label(i, n, r);
        try {
          const SphericalModelSpec spec = random_spherical(n, rng, glassy_shape());
          const TalagrandProfile start = random_talagrand(n, r, rng, 0.8, 0.1);
          const ProfileSolution sol = minimize_s(spec, start, Target::B, opt);
          gap.add(sol.cert.gap_AB, name);
          crit.add(std::max(sol.cert.residual_cs1, sol.cert.residual_csb), name);
        } catch (const std::exception& e) {
          gap.error(name, e.what());
          crit.error(name, e.what());
        }
      }
  return {gap.result(), crit.result()};
}

std::vector<CriterionResult> check_parameterizations(const Context& ctx) {
  Tally t = ctx.tally("AC-17");
  OptimizeOptions tal;
  tal.multistart = 8;
  tal.weight_margin = 1e-7;
  tal.threads = ctx.options.threads;
  tal.seed = ctx.options.seed;
  // The Talagrand profiles with r levels are the Panchenko profiles with r + 1 levels whose
  // outer weights sit at the ends of (0, 1).
  OptimizeOptions pan = tal;
  pan.first_weight = 1e-7;
  pan.last_weight = 1.0 - 1e-7;
  const int sizes[5][2] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}, {3, 2}};
  for (int i = 0; i < 5; ++i) {
    const int n = sizes[i][0], r = sizes[i][1];
    auto rng = ctx.rng(17, i);
    const std::string name = label(i, n, r);
    try {
      const SphericalModelSpec spec = random_spherical(n, rng, glassy_shape());
      const double a = minimize_full(spec, r, Target::A, Parameterization::Talagrand, tal).best.cert.value;
      const double b = minimize_full(spec, r + 1, Target::A, Parameterization::Panchenko, pan).best.cert.value;
      t.add(std::abs(a - b), name);
    } catch (const std::exception& e) {
      t.error(name, e.what());
    }
  }
  return {t.result()};
}

}  // namespace elman::verify::detail
