#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "checks.hpp"
#include "elman/functionals.hpp"
#include "elman/optimize.hpp"
#include "elman/verify/instances.hpp"

namespace elman::verify::detail {

namespace {

std::string label(int i, int n, int r) {
  return "instance " + std::to_string(i) + " (n=" + std::to_string(n) + ", r=" + std::to_string(r) + ")";
}

// b strictly inside the domain D + b - d^0 > 0.
Vector feasible_b(const SphericalModelSpec& spec, const StepProfile& sp, std::mt19937_64& rng) {
  const Matrix d = step_d(sp, spec.xi);
  Vector b = d.col(0);
  for (Eigen::Index x = 0; x < b.size(); ++x) b(x) += uniform(rng, 0.5, 2.0);
  return b;
}

// Inserts a node at u inside (a, b) and moves Phi there by eps with (1/n) sum eps_x / q_x = 0.
ContinuumProfile perturb_off_support(const ContinuumProfile& c, double a, double b, std::mt19937_64& rng) {
  const double u = a + uniform(rng, 0.25, 0.75) * (b - a);
  const Vector lo = c.phi_at(a), mid = c.phi_at(u), hi = c.phi_at(b);
  const Eigen::Index n = c.sites();
  Vector eps(n);
  for (Eigen::Index x = 0; x < n; ++x) eps(x) = uniform(rng, -1.0, 1.0) * c.caps(x);
  eps.array() -= (eps.array() / c.caps.array()).mean() * c.caps.array();
  double room = 1.0;
  for (Eigen::Index x = 0; x < n; ++x) {
    if (eps(x) > 0.0) room = std::min(room, 0.5 * (hi(x) - mid(x)) / eps(x));
    if (eps(x) < 0.0) room = std::min(room, 0.5 * (mid(x) - lo(x)) / -eps(x));
  }
  eps *= room;

  ContinuumProfile out = c;
  std::vector<double> nodes;
  Matrix phi(n, c.nodes.size() + 1);
  Eigen::Index col = 0;
  bool inserted = false;
  for (std::size_t j = 0; j < c.nodes.size(); ++j) {
    if (!inserted && c.nodes[j] > u) {
      nodes.push_back(u);
      phi.col(col++) = mid + eps;
      inserted = true;
    }
    if (c.nodes[j] == u) continue;
    nodes.push_back(c.nodes[j]);
    phi.col(col++) = c.phi.col(j);
  }
  out.nodes = nodes;
  out.phi = phi.leftCols(col);
  return out;
}

}  // namespace

std::vector<CriterionResult> check_discrete_continuum(const Context& ctx) {
  Tally t = ctx.tally("AC-5a");
  for (int i = 0; i < 50; ++i) {
    auto rng = ctx.rng(5, i);
    const int n = 1 + i % 3, r = 1 + (i / 3) % 3;
    try {
      const SphericalModelSpec spec = random_spherical(n, rng);
      const TalagrandProfile p = random_talagrand(n, r, rng);
      const ContinuumProfile c = talagrand_to_continuum(p);
      const double eb = std::abs(eval_B_discrete(spec, p).value - eval_B_continuum(spec, c).value);
      const Vector b = feasible_b(spec, to_steps(p), rng);
      const double ea = std::abs(eval_A_discrete(spec, p, b).value - eval_A_continuum(spec, c, b).value);
      t.add(std::max(eb, ea), label(i, n, r));
    } catch (const std::exception& e) {
      t.error(label(i, n, r), e.what());
    }
  }
  return {t.result()};
}

std::vector<CriterionResult> check_q_star(const Context& ctx) {
  Tally t = ctx.tally("AC-7");
  for (int i = 0; i < 20; ++i) {
    auto rng = ctx.rng(7, i);
    const int n = 1 + i % 3, r = 1 + (i / 3) % 3;
    try {
      const SphericalModelSpec spec = random_spherical(n, rng);
      const ContinuumProfile c = talagrand_to_continuum(random_talagrand(n, r, rng));
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int k = 0; k < 5; ++k) {
        const double q_star = c.q_star + (c.q_total() - c.q_star) * 0.9 * k / 4.0;
        const double v = eval_B_continuum(spec, c, 32, q_star).value;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      t.add(hi - lo, label(i, n, r));
    } catch (const std::exception& e) {
      t.error(label(i, n, r), e.what());
    }
  }
  return {t.result()};
}

std::vector<CriterionResult> check_support(const Context& ctx) {
  Tally t = ctx.tally("AC-8");
  for (int i = 0; i < 20; ++i) {
    auto rng = ctx.rng(8, i);
    const int n = 2 + i % 2, r = 1 + (i / 2) % 3;
    try {
      const SphericalModelSpec spec = random_spherical(n, rng);
      const ContinuumProfile c = talagrand_to_continuum(random_talagrand(n, r, rng));
      // Gaps between consecutive support points of zeta, including [0, first atom) and (last atom, q_t].
      std::vector<double> pts{0.0};
      for (const auto& a : c.atoms) pts.push_back(a.first);
      pts.push_back(c.q_total());
      std::vector<std::pair<double, double>> gaps;
      for (std::size_t j = 0; j + 1 < pts.size(); ++j)
        if (pts[j + 1] - pts[j] > 1e-3) gaps.emplace_back(pts[j], pts[j + 1]);
      if (gaps.empty()) {
        t.note(label(i, n, r) + " has no off-support gap");
        continue;
      }
      const auto [a, b] = gaps[static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(gaps.size())))];
      const ContinuumProfile moved = perturb_off_support(c, a, b, rng);
      const double db = std::abs(eval_B_continuum(spec, c).value - eval_B_continuum(spec, moved).value);
      const double da = std::abs(minimize_b(spec, c).value - minimize_b(spec, moved).value);
      t.add(std::max(db, da), label(i, n, r));
    } catch (const std::exception& e) {
      t.error(label(i, n, r), e.what());
    }
  }
  return {t.result()};
}

std::vector<CriterionResult> check_continuity(const Context& ctx) {
  Tally t = ctx.tally("AC-9");
  for (int i = 0; i < 100; ++i) {
    auto rng = ctx.rng(9, i);
    const int n = 1 + i % 3, r = 1 + (i / 3) % 3;
    try {
      SphericalModelSpec s0 = random_spherical(n, rng);
      SphericalModelSpec s1 = s0;
      for (int x = 0; x < n; ++x) s1.xi[x] = random_mixing(rng);
      const TalagrandProfile p = random_talagrand(n, r, rng);
      const double diff = std::abs(eval_B_discrete(s0, p).value - eval_B_discrete(s1, p).value);
      const double bound = continuity_bound(s0.xi, s1.xi);
      t.add(bound > 0.0 ? diff / bound : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()),
            label(i, n, r));
    } catch (const std::exception& e) {
      t.error(label(i, n, r), e.what());
    }
  }
  return {t.result()};
}

}  // namespace elman::verify::detail
