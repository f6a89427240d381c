#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "checks.hpp"
#include "elman/functionals.hpp"
#include "elman/montecarlo.hpp"
#include "elman/optimize.hpp"
#include "elman/verify/instances.hpp"

namespace elman::verify::detail {

namespace {

std::string label(int i, int L, double beta) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "instance %d (L=%d, beta=%.3g)", i, L, beta);
  return buf;
}

struct Instance {
  EuclideanModelSpec spec;
  Vector q;
  ContinuumProfile profile;
};

Instance random_instance(int L, double beta, std::mt19937_64& rng) {
  Instance in;
  in.spec = random_euclidean(L, rng, beta);
  const int n = static_cast<int>(in.spec.lattice.site_count());
  in.q = Vector(n);
  for (int x = 0; x < n; ++x) in.q(x) = uniform(rng, 0.3, 2.0);
  const int r = 1 + static_cast<int>(uniform(rng, 0.0, 2.0));
  in.profile = scale_to_caps(talagrand_to_continuum(random_talagrand(n, r, rng)), in.q);
  return in;
}

}  // namespace

std::vector<CriterionResult> check_beta(const Context& ctx) {
  Tally t = ctx.tally("AC-12");
  for (int i = 0; i < 20; ++i) {
    auto rng = ctx.rng(12, i);
    const int L = 1 + i % 3;
    const double beta = log_uniform(rng, 0.3, 3.0);
    const std::string name = label(i, L, beta);
    try {
      const Instance in = random_instance(L, beta, rng);
      const double a = eval_P(in.spec, in.q, in.profile, Route::Direct).value;
      const double b = eval_P(reparameterize_beta(in.spec), in.q, in.profile, Route::Direct).value;
      t.add(std::abs(a - b), name);
    } catch (const std::exception& e) {
      t.error(name, e.what());
    }
  }
  return {t.result()};
}

std::vector<CriterionResult> check_mapping(const Context& ctx) {
  Tally t = ctx.tally("AC-13");
  for (int i = 0; i < 20; ++i) {
    auto rng = ctx.rng(13, i);
    const int L = 1 + i % 3;
    const double beta = log_uniform(rng, 0.5, 2.0);
    const std::string name = label(i, L, beta);
    try {
      const Instance in = random_instance(L, beta, rng);
      const double a = eval_P(in.spec, in.q, in.profile, Route::Direct).value;
      const double b = eval_P(in.spec, in.q, in.profile, Route::Mapped).value;
      t.add(std::abs(a - b), name);
    } catch (const std::exception& e) {
      t.error(name, e.what());
    }
  }
  return {t.result()};
}

std::vector<CriterionResult> check_annealed(const Context& ctx) {
  Tally t = ctx.tally("AC-18");
  SupOptions opt;
  opt.inner.multistart = 4;
  opt.inner.seed = ctx.options.seed;
  opt.inner.threads = ctx.options.threads;
  for (int i = 0; i < 5; ++i) {
    auto rng = ctx.rng(18, i);
    const int L = 1 + i % 2;
    const double beta = uniform(rng, 0.02, 0.1);
    const std::string name = label(i, L, beta);
    try {
      const EuclideanModelSpec spec = random_euclidean(L, rng, beta);
      const SupSolution sol = sup_over_q(spec, opt);
      t.add(std::abs(sol.value - annealed_limit(spec)), name);
    } catch (const std::exception& e) {
      t.error(name, e.what());
    }
  }
  return {t.result()};
}

}  // namespace elman::verify::detail
