#include "elman/verify/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "checks.hpp"
#include "elman/error.hpp"

namespace elman::verify {

namespace detail {

Tally::Tally(std::string id, double tolerance, Comparison comparison)
    : id_(std::move(id)),
      tolerance_(tolerance),
      comparison_(comparison),
      worst_(comparison == Comparison::Below ? 0.0 : std::numeric_limits<double>::infinity()) {}

void Tally::add(double value, const std::string& label) {
  ++cases_;
  const bool ok = comparison_ == Comparison::Below ? value < tolerance_ : value > tolerance_;
  if (!ok) ++failures_;
  const bool worse = std::isnan(value) || (comparison_ == Comparison::Below ? value > worst_ : value < worst_);
  if (worse || worst_label_.empty()) {
    worst_ = value;
    worst_label_ = label;
  }
}

void Tally::error(const std::string& label, const std::string& what) {
  ++cases_;
  ++failures_;
  notes_.push_back(label + ": " + what);
}

void Tally::note(const std::string& text) { notes_.push_back(text); }

CriterionResult Tally::result() const {
  CriterionResult r;
  r.id = id_;
  r.measured = worst_;
  r.tolerance = tolerance_;
  r.comparison = comparison_;
  r.cases = cases_;
  r.failures = failures_;
  r.passed = failures_ == 0 && cases_ > 0;
  std::string d;
  if (!worst_label_.empty()) d = "worst " + worst_label_;
  for (const std::string& n : notes_) d += (d.empty() ? "" : "; ") + n;
  r.detail = d;
  return r;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

}  // namespace detail

namespace {

struct Entry {
  Criterion criterion;
  detail::CheckFn check;
};

const std::vector<Entry>& registry() {
  using C = Comparison;
  static const std::vector<Entry> entries = {
      {{"AC-1", "Duality residual", "max_x |diag((D + K)^-1)_x - u_x|", 1e-10, C::Below, 10, "duality"},
       detail::check_duality_residual},
      {{"AC-2", "Gradient identity", "max relative error of n grad Lambda against K", 1e-6, C::Below, 10, "duality"},
       detail::check_gradient_identity},
      {{"AC-3", "Jacobian identity", "max relative error of grad_K against differences of solve_K", 1e-5, C::Below, 20,
        "duality"},
       detail::check_jacobian_identity},
      {{"AC-4", "Closed forms", "max error of K and Lambda against the D = 0 and one-site formulas", 1e-12, C::Below, 1,
        "duality"},
       detail::check_closed_forms},
      {{"AC-5a", "Discrete/continuum agreement", "max |discrete - continuum| over B and A", 1e-8, C::Below, 60,
        "functionals"},
       detail::check_discrete_continuum},
      {{"AC-5b", "A = B at minimizers", "max gap_AB at fixed-weight minimizers", 1e-6, C::Below, 300, "optimize"},
       detail::check_minimizers},
      {{"AC-6", "Critical equations", "max of residual_cs1 and residual_csb at the same minimizers", 1e-6, C::Below, 300,
        "optimize"},
       detail::check_minimizers},
      {{"AC-7", "q_star independence", "max spread of B over valid q_star choices", 1e-10, C::Below, 10, "functionals"},
       detail::check_q_star},
      {{"AC-8", "Support invariance", "max change of B and inf_b A under off-support Phi perturbations", 1e-8, C::Below,
        60, "functionals"},
       detail::check_support},
      {{"AC-9", "xi continuity", "max |B(xi0) - B(xi1)| / continuity_bound", 1.0, C::Below, 30, "functionals"},
       detail::check_continuity},
      {{"AC-10", "Y^b oracle", "max relative error of the closed form against the recursion", 1e-6, C::Below, 120, "rpc"},
       detail::check_y_b},
      {{"AC-11", "Gamma_2 oracle", "max relative error of the closed form against the recursion", 1e-6, C::Below, 30,
        "rpc"},
       detail::check_gamma2},
      {{"AC-12", "beta reparameterization", "max |P(beta) - P(1; reparameterized)|", 1e-12, C::Below, 5, "euclidean"},
       detail::check_beta},
      {{"AC-13", "Spherical/Euclidean mapping", "max |P direct - P mapped|", 1e-7, C::Below, 120, "euclidean"},
       detail::check_mapping},
      {{"AC-14", "Hamiltonian covariance", "max |z| of empirical covariance against target", 4.0, C::Below, 120,
        "montecarlo"},
       detail::check_covariance},
      {{"AC-15", "h-shift identity", "max error / (N n)", 1e-9, C::Below, 10, "montecarlo"}, detail::check_h_shift},
      {{"AC-16", "Boundary bounds", "min epsilon over coupling matrices", 0.0, C::Above, 30, "boundary"},
       detail::check_boundary_epsilon},
      {{"AC-17", "Parameterization equivalence", "max |inf Talagrand A - inf Panchenko A|", 3e-6, C::Below, 300,
        "optimize"},
       detail::check_parameterizations},
      {{"AC-18", "Annealed consistency", "max |sup-inf value - annealed limit| for beta <= 0.1", 5e-3, C::Below, 600,
        "euclidean"},
       detail::check_annealed},
  };
  return entries;
}

const Entry& entry(const std::string& id) {
  for (const Entry& e : registry())
    if (e.criterion.id == id) return e;
  throw Error(ErrorKind::InvalidInput, "unknown criterion " + id);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = [] {
    std::vector<Criterion> out;
    for (const Entry& e : registry()) out.push_back(e.criterion);
    return out;
  }();
  return list;
}

std::vector<std::string> suite_names() {
  std::vector<std::string> names{"all"};
  for (const Criterion& c : criteria())
    if (std::find(names.begin(), names.end(), c.suite) == names.end()) names.push_back(c.suite);
  return names;
}

std::vector<std::string> select(std::string_view suite) {
  std::vector<std::string> ids;
  std::stringstream in{std::string(suite)};
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    bool matched = false;
    for (const Criterion& c : criteria())
      if (item == "all" || c.suite == item || c.id == item) {
        matched = true;
        if (std::find(ids.begin(), ids.end(), c.id) == ids.end()) ids.push_back(c.id);
      }
    if (!matched) throw Error(ErrorKind::InvalidInput, "unknown suite or criterion '" + item + "'");
  }
  if (ids.empty()) throw Error(ErrorKind::InvalidInput, "empty suite selection");
  std::vector<std::string> ordered;
  for (const Criterion& c : criteria())
    if (std::find(ids.begin(), ids.end(), c.id) != ids.end()) ordered.push_back(c.id);
  return ordered;
}

std::vector<CriterionResult> run(const std::vector<std::string>& ids, const VerifyOptions& opt,
                                 const std::function<void(const CriterionResult&)>& on_result) {
  detail::Context ctx;
  ctx.options = opt;
  ctx.tolerance = [&opt](const std::string& id) { return opt.tolerance ? *opt.tolerance : entry(id).criterion.tolerance; };
  ctx.comparison = [](const std::string& id) { return entry(id).criterion.comparison; };

  std::map<detail::CheckFn, std::vector<CriterionResult>> done;
  std::map<detail::CheckFn, double> seconds;
  std::vector<CriterionResult> out;
  for (const std::string& id : ids) {
    const Entry& e = entry(id);
    if (!done.count(e.check)) {
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<CriterionResult> rs;
      try {
        rs = e.check(ctx);
      } catch (const std::exception& ex) {
        detail::Tally t = ctx.tally(id);
        t.error("run", ex.what());
        rs.push_back(t.result());
      }
      seconds[e.check] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      done[e.check] = std::move(rs);
    }
    CriterionResult r;
    bool found = false;
    for (const CriterionResult& c : done[e.check])
      if (c.id == id) r = c, found = true;
    if (!found) {
      r.id = id;
      r.tolerance = ctx.tolerance(id);
      r.comparison = e.criterion.comparison;
      r.detail = "shared run failed before reaching this criterion";
    }
    r.seconds = seconds[e.check];
    r.budget_seconds = e.criterion.budget_seconds;
    r.within_budget = r.seconds <= r.budget_seconds;
    if (opt.enforce_budget && !r.within_budget) {
      r.passed = false;
      r.detail += (r.detail.empty() ? "" : "; ") + std::string("runtime over budget");
    }
    if (on_result) on_result(r);
    out.push_back(r);
  }
  return out;
}

std::string format_line(const CriterionResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-6s %s  measured %.3e %s %.3e  (%ld cases, %.1f s of %.0f s)", r.id.c_str(),
                r.passed ? "PASS" : "FAIL", r.measured, r.comparison == Comparison::Below ? "<" : ">", r.tolerance,
                r.cases, r.seconds, r.budget_seconds);
  std::string line = buf;
  if (!r.passed && !r.detail.empty()) line += "  [" + r.detail + "]";
  return line;
}

}  // namespace elman::verify
