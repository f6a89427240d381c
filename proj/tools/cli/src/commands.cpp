#include "elman/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "elman/error.hpp"
#include "elman/random.hpp"
#include "elman/verify/acceptance.hpp"

namespace elman::cli {

using io::json;
using io::SchemaError;

// ---- output ----------------------------------------------------------------------------

std::string Sink::path(const std::string& file) const {
  std::filesystem::create_directories(g_.out);
  return (std::filesystem::path(g_.out) / file).string();
}

void Sink::json(const std::string& name, const io::json& j) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (g_.out.empty()) return;
  std::ofstream f(path(name + ".json"), std::ios::binary);
  f << text;
  if (!f) throw SchemaError(g_.out, "cannot write " + name + ".json");
}

void Sink::csv(const std::string& name, const io::Csv& table) {
  if (g_.out.empty()) return;
  std::ofstream f(path(name + ".csv"), std::ios::binary);
  f << table.str();
  if (!f) throw SchemaError(g_.out, "cannot write " + name + ".csv");
}

int report_failure(const std::exception& e) {
  if (const auto* s = dynamic_cast<const SchemaError*>(&e)) {
    std::fprintf(stderr, "error: %s\n", s->what());
    return kInputError;
  }
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::NoConvergence:
      case ErrorKind::BudgetExceeded:
      case ErrorKind::TruncationInsufficient:
        if (std::isnan(err->residual()))
          std::fprintf(stderr, "error: %s\n", err->what());
        else
          std::fprintf(stderr, "error: %s; residual %s\n", err->what(), io::format_number(err->residual()).c_str());
        return kNumericError;
      default:
        std::fprintf(stderr, "error: %s\n", err->what());
        return kInputError;
    }
  }
  std::fprintf(stderr, "error: %s\n", e.what());
  return kInputError;
}

namespace {

// ---- config helpers --------------------------------------------------------------------

double opt_number(const json& j, const char* key, double fallback) {
  return io::has(j, key) ? io::number(j[key], key) : fallback;
}

int opt_integer(const json& j, const char* key, int fallback) {
  return io::has(j, key) ? io::integer(j[key], key) : fallback;
}

int positive(int v, const char* key) {
  if (v < 1) throw SchemaError(key, "must be positive");
  return v;
}

OptimizeOptions optimize_options(const json& cfg, const GlobalOptions& g) {
  OptimizeOptions opt;
  opt.seed = g.seed;
  opt.threads = g.threads;
  if (g.tol) opt.gradient_tol = *g.tol;
  if (!io::has(cfg, "options")) return opt;
  const json& j = cfg["options"];
  io::expect_object(j, "options", {"gradient_tol", "max_iterations", "polish_iterations", "multistart", "first_weight",
                                   "last_weight", "b_tol"});
  if (io::has(j, "gradient_tol")) opt.gradient_tol = io::number(j["gradient_tol"], "options.gradient_tol");
  if (io::has(j, "max_iterations")) opt.max_iterations = positive(io::integer(j["max_iterations"], "options.max_iterations"), "options.max_iterations");
  if (io::has(j, "polish_iterations")) opt.polish_iterations = io::integer(j["polish_iterations"], "options.polish_iterations");
  if (io::has(j, "multistart")) opt.multistart = positive(io::integer(j["multistart"], "options.multistart"), "options.multistart");
  if (io::has(j, "first_weight")) opt.first_weight = io::number(j["first_weight"], "options.first_weight");
  if (io::has(j, "last_weight")) opt.last_weight = io::number(j["last_weight"], "options.last_weight");
  if (io::has(j, "b_tol")) opt.b_tol = io::number(j["b_tol"], "options.b_tol");
  return opt;
}

RecursionOptions recursion_options(const json& cfg, const GlobalOptions& g) {
  RecursionOptions opt;
  opt.seed = g.seed;
  opt.threads = g.threads;
  if (io::has(cfg, "nodes")) opt.nodes = positive(io::integer(cfg["nodes"], "nodes"), "nodes");
  return opt;
}

void check_sites(Eigen::Index have, Eigen::Index want, const std::string& path) {
  if (have != want)
    throw SchemaError(path, "expected " + std::to_string(want) + " sites, found " + std::to_string(have));
}

Vector site_vector(const json& cfg, const char* key, Eigen::Index n) {
  const Vector v = io::vector(io::require(cfg, key, ""), key);
  check_sites(v.size(), n, key);
  return v;
}

ContinuumProfile as_continuum(const io::Profile& p) {
  if (const auto* t = std::get_if<TalagrandProfile>(&p)) return talagrand_to_continuum(*t);
  if (const auto* q = std::get_if<PanchenkoProfile>(&p)) return panchenko_to_continuum(*q);
  return std::get<ContinuumProfile>(p);
}

Eigen::Index profile_sites(const io::Profile& p) {
  return std::visit([](const auto& v) { return v.sites(); }, p);
}

const PanchenkoProfile& need_panchenko(const io::Profile& p) {
  if (const auto* q = std::get_if<PanchenkoProfile>(&p)) return *q;
  throw SchemaError("profile.form", "this functional needs a panchenko profile");
}

json agreement(double a, double b, double tol) {
  const double diff = std::abs(a - b);
  return {{"abs_diff", diff}, {"tolerance", tol}, {"agree", diff <= tol * std::max(1.0, std::abs(b))}};
}

json recursion_json(const RecursionResult& r) {
  json j = io::to_json(r);
  j["route"] = "recursion";
  return j;
}

json value_json(double v, const char* route) { return {{"value", v}, {"route", route}}; }

}  // namespace

// ---- kd solve --------------------------------------------------------------------------

int kd_solve(const GlobalOptions& g, const std::string& config) {
  const json cfg = io::read_file(config);
  io::expect_object(cfg, "", {"D", "u"});
  const Matrix D = io::matrix(io::require(cfg, "D", ""), "D");
  if (D.rows() == 0 || D.cols() != D.rows()) throw SchemaError("D", "expected a nonempty square matrix");
  if (!D.isApprox(D.transpose(), 1e-12)) throw SchemaError("D", "must be symmetric");
  const Vector u = site_vector(cfg, "u", D.rows());
  KSolveOptions opt;
  if (g.tol) opt.tol = *g.tol;
  const DualPoint p = solve_K(D, u, opt);
  json out = io::to_json(p);
  out["lambda"] = lambda(D, p);
  Sink(g).json("kd", out);
  return kOk;
}

// ---- profile convert -------------------------------------------------------------------

int profile_convert(const GlobalOptions& g, const std::string& config, const std::string& to) {
  const json cfg = io::read_file(config);
  io::expect_object(cfg, "", {"profile", "caps"});
  const io::Profile p = io::parse_profile(io::require(cfg, "profile", ""), "profile");
  ContinuumProfile c = as_continuum(p);
  if (to == "continuum") {
    if (io::has(cfg, "caps")) {
      const Vector caps = site_vector(cfg, "caps", c.sites());
      if ((caps.array() <= 0.0).any()) throw SchemaError("caps", "must be positive");
      c = scale_to_caps(normalize_caps(c), caps);
    }
  } else if (to == "unit") {
    if (io::has(cfg, "caps")) throw SchemaError("caps", "not used with --to unit");
    c = normalize_caps(c);
  } else {
    throw SchemaError("--to", "expected continuum or unit");
  }
  json out = io::to_json(c);
  Sink(g).json("profile", out);
  return kOk;
}

// ---- functional eval -------------------------------------------------------------------

int functional_eval(const GlobalOptions& g, const std::string& config, const std::string& functional,
                    const std::string& route_in) {
  const json cfg = io::read_file(config);
  Sink sink(g);
  json out = {{"functional", functional}};
  double tol = 0.0;
  std::string first_route, second_route;
  std::optional<double> first_value, second_value;
  std::string route = route_in;

  auto both = [&](const std::string& a, const std::string& b) {
    if (route != "both") return false;
    first_route = a;
    second_route = b;
    return true;
  };

  if (functional == "B" || functional == "A") {
    io::expect_object(cfg, "", {"model", "profile", "b", "quad", "q_star"});
    const SphericalModelSpec spec = io::parse_spherical(io::require(cfg, "model", ""), "model");
    const io::Profile p = io::parse_profile(io::require(cfg, "profile", ""), "profile");
    check_sites(profile_sites(p), spec.D.rows(), "profile");
    const int quad = positive(opt_integer(cfg, "quad", 32), "quad");
    const bool discrete_ok = !std::holds_alternative<ContinuumProfile>(p) &&
                             (functional == "A" || std::holds_alternative<TalagrandProfile>(p));
    if (route.empty()) route = discrete_ok ? "discrete" : "continuum";
    if (route != "discrete" && route != "continuum" && route != "both")
      throw SchemaError("--route", "expected discrete, continuum or both for " + functional);
    if (route != "continuum" && !discrete_ok)
      throw SchemaError("profile.form", "the discrete route needs a " +
                                            std::string(functional == "B" ? "talagrand" : "talagrand or panchenko") +
                                            " profile");
    tol = g.tol.value_or(1e-8);
    std::optional<double> q_star;
    if (io::has(cfg, "q_star")) q_star = io::number(cfg["q_star"], "q_star");
    const ContinuumProfile c = as_continuum(p);

    Vector b;
    if (functional == "A") {
      if (io::has(cfg, "b")) {
        b = site_vector(cfg, "b", spec.D.rows());
      } else {
        const BSolution s = std::visit([&](const auto& v) { return minimize_b(spec, v); }, p);
        b = s.b;
        out["b_minimizer"] = {{"residual", s.residual}, {"iterations", s.iterations}, {"best_effort", s.best_effort}};
      }
      out["b"] = io::to_json(b);
    } else if (io::has(cfg, "b")) {
      throw SchemaError("b", "only used by functional A");
    }

    auto discrete = [&] {
      if (functional == "B") return eval_B_discrete(spec, std::get<TalagrandProfile>(p));
      if (const auto* t = std::get_if<TalagrandProfile>(&p)) return eval_A_discrete(spec, *t, b);
      return eval_A_discrete(spec, std::get<PanchenkoProfile>(p), b);
    };
    auto continuum = [&] {
      return functional == "B" ? eval_B_continuum(spec, c, quad, q_star) : eval_A_continuum(spec, c, b, quad);
    };
    if (both("discrete", "continuum")) {
      const EvaluationReport d = discrete(), k = continuum();
      out["routes"] = {{"discrete", io::to_json(d)}, {"continuum", io::to_json(k)}};
      first_value = d.value;
      second_value = k.value;
    } else {
      out["route"] = route;
      out["report"] = io::to_json(route == "discrete" ? discrete() : continuum());
    }
  } else if (functional == "P") {
    io::expect_object(cfg, "", {"model", "q", "profile", "quad", "q_star", "truncation_tol"});
    const EuclideanModelSpec spec = io::parse_euclidean(io::require(cfg, "model", ""), "model");
    const auto n = static_cast<Eigen::Index>(spec.lattice.site_count());
    const Vector q = site_vector(cfg, "q", n);
    if ((q.array() <= 0.0).any()) throw SchemaError("q", "must be positive");
    const io::Profile p = io::parse_profile(io::require(cfg, "profile", ""), "profile");
    check_sites(profile_sites(p), n, "profile");
    ContinuumProfile c = as_continuum(p);
    if (std::holds_alternative<ContinuumProfile>(p)) {
      if ((c.caps - q).cwiseAbs().maxCoeff() > 1e-12) throw SchemaError("profile.caps", "must equal q");
    } else {
      c = scale_to_caps(c, q);
    }
    const int quad = positive(opt_integer(cfg, "quad", 32), "quad");
    const double trunc = opt_number(cfg, "truncation_tol", 1e-13);
    std::optional<double> q_star;
    if (io::has(cfg, "q_star")) q_star = io::number(cfg["q_star"], "q_star");
    if (route.empty()) route = "direct";
    if (route != "direct" && route != "mapped" && route != "both")
      throw SchemaError("--route", "expected direct, mapped or both for P");
    tol = g.tol.value_or(1e-7);
    auto eval = [&](Route r) { return eval_P(spec, q, c, r, quad, q_star, trunc); };
    if (both("direct", "mapped")) {
      const EvaluationReport d = eval(Route::Direct), m = eval(Route::Mapped);
      out["routes"] = {{"direct", io::to_json(d)}, {"mapped", io::to_json(m)}};
      first_value = d.value;
      second_value = m.value;
    } else {
      out["route"] = route;
      out["report"] = io::to_json(eval(route == "direct" ? Route::Direct : Route::Mapped));
    }
  } else if (functional == "Y" || functional == "W" || functional == "Gamma2") {
    io::expect_object(cfg, "", {"model", "profile", "b", "v", "M", "nodes"});
    const SphericalModelSpec spec = io::parse_spherical(io::require(cfg, "model", ""), "model");
    const io::Profile prof = io::parse_profile(io::require(cfg, "profile", ""), "profile");
    const PanchenkoProfile& p = need_panchenko(prof);
    const Eigen::Index n = spec.D.rows();
    check_sites(p.sites(), n, "profile");
    const RecursionOptions ropt = recursion_options(cfg, g);
    tol = g.tol.value_or(1e-6);
    if (functional == "W") {
      if (!route.empty() && route != "closed") throw SchemaError("--route", "W has only the closed route");
      if (io::has(cfg, "b")) {
        const Vector b = site_vector(cfg, "b", n);
        out["b"] = io::to_json(b);
        out["report"] = value_json(w_of_b(spec, p, b), "closed");
      } else {
        const WMinimum w = minimize_w(spec, p, g.tol.value_or(1e-9));
        out["b"] = io::to_json(w.b);
        out["report"] = {{"value", w.value}, {"gradient", w.gradient}, {"iterations", w.iterations}, {"route", "closed"}};
      }
    } else {
      if (route.empty()) route = "closed";
      if (route != "closed" && route != "recursion" && route != "both")
        throw SchemaError("--route", "expected closed, recursion or both for " + functional);
      std::function<double()> closed;
      std::function<RecursionResult()> numeric;
      if (functional == "Y") {
        if (io::has(cfg, "M")) throw SchemaError("M", "only used by Gamma2");
        const Vector b = site_vector(cfg, "b", n);
        const Vector v = io::has(cfg, "v") ? site_vector(cfg, "v", n) : spec.h;
        closed = [=, &spec, &p] { return y_b_closed_form(spec, p, b, v); };
        numeric = [=, &spec, &p] { return y_b_numeric(spec, p, b, v, ropt); };
      } else {
        if (io::has(cfg, "b") || io::has(cfg, "v")) throw SchemaError("b", "Gamma2 takes no b or v");
        const int M = positive(opt_integer(cfg, "M", 1), "M");
        closed = [&spec, &p] { return gamma2_closed_form(spec, p); };
        numeric = [=, &spec, &p] { return gamma2_numeric(spec, p, M, ropt); };
      }
      if (both("closed", "recursion")) {
        const double a = closed();
        const RecursionResult r = numeric();
        out["routes"] = {{"closed", value_json(a, "closed")}, {"recursion", recursion_json(r)}};
        first_value = a;
        second_value = r.value;
      } else {
        out["route"] = route;
        out["report"] = route == "closed" ? value_json(closed(), "closed") : recursion_json(numeric());
      }
    }
  } else {
    throw SchemaError("--functional", "expected B, A, P, Y, W or Gamma2");
  }

  int code = kOk;
  if (first_value && second_value) {
    out["agreement"] = agreement(*first_value, *second_value, tol);
    out["agreement"]["routes"] = {first_route, second_route};
    if (!out["agreement"]["agree"].get<bool>()) code = kCheckFailed;
  }
  sink.json("functional", out);
  return code;
}

// ---- minimize --------------------------------------------------------------------------

int minimize(const GlobalOptions& g, const std::string& config) {
  const json cfg = io::read_file(config);
  io::expect_object(cfg, "", {"model", "mode", "target", "form", "levels", "start", "options"});
  const SphericalModelSpec spec = io::parse_spherical(io::require(cfg, "model", ""), "model");
  const std::string mode = io::has(cfg, "mode") ? io::text(cfg["mode"], "mode") : "full";
  const std::string target_s = io::has(cfg, "target") ? io::text(cfg["target"], "target") : "B";
  const std::string form_s = io::has(cfg, "form") ? io::text(cfg["form"], "form") : "talagrand";
  if (target_s != "A" && target_s != "B") throw SchemaError("target", "expected A or B");
  if (form_s != "talagrand" && form_s != "panchenko") throw SchemaError("form", "expected talagrand or panchenko");
  const Target target = target_s == "A" ? Target::A : Target::B;
  const Parameterization form = form_s == "talagrand" ? Parameterization::Talagrand : Parameterization::Panchenko;
  if (form == Parameterization::Panchenko && target == Target::B)
    throw SchemaError("target", "the panchenko form minimizes A only");
  const OptimizeOptions opt = optimize_options(cfg, g);
  Sink sink(g);

  auto check_certificate = [](const Certificate& c) -> int { return c.converged || c.best_effort ? kOk : kNumericError; };

  if (mode == "s") {
    if (io::has(cfg, "levels") || io::has(cfg, "form")) throw SchemaError("levels", "mode s takes its shape from start");
    const io::Profile start = io::parse_profile(io::require(cfg, "start", ""), "start");
    check_sites(profile_sites(start), spec.D.rows(), "start");
    ProfileSolution sol;
    if (const auto* t = std::get_if<TalagrandProfile>(&start)) {
      sol = minimize_s(spec, *t, target, opt);
    } else if (const auto* q = std::get_if<PanchenkoProfile>(&start)) {
      if (target == Target::B) throw SchemaError("target", "the panchenko form minimizes A only");
      sol = minimize_s(spec, *q, opt);
    } else {
      throw SchemaError("start.form", "expected talagrand or panchenko");
    }
    sink.json("minimize", {{"mode", mode}, {"target", target_s}, {"solution", io::to_json(sol)}});
    return check_certificate(sol.cert);
  }
  if (io::has(cfg, "start")) throw SchemaError("start", "only used by mode s");
  const int levels = positive(opt_integer(cfg, "levels", 1), "levels");
  if (mode == "full") {
    const FullSolution full = minimize_full(spec, levels, target, form, opt);
    io::Csv table({"start", "value"});
    for (std::size_t i = 0; i < full.start_values.size(); ++i)
      table.row({static_cast<double>(i), full.start_values[i]});
    sink.csv("starts", table);
    sink.json("minimize", {{"mode", mode},
                           {"target", target_s},
                           {"levels", levels},
                           {"solution", io::to_json(full.best)},
                           {"start_values", full.start_values},
                           {"spread", full.spread},
                           {"distinct_optima", full.distinct_optima}});
    return check_certificate(full.best.cert);
  }
  if (mode == "ladder") {
    if (form != Parameterization::Talagrand) throw SchemaError("form", "the ladder uses the talagrand form");
    const std::vector<FullSolution> ladder = minimize_ladder(spec, levels, target, opt);
    io::Csv table({"levels", "value", "gap_AB", "projected_gradient", "spread"});
    json rungs = json::array();
    int code = kOk;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      const FullSolution& f = ladder[i];
      table.row({static_cast<double>(i + 1), f.best.cert.value, f.best.cert.gap_AB, f.best.cert.projected_gradient,
                 f.spread});
      rungs.push_back({{"levels", i + 1}, {"solution", io::to_json(f.best)}, {"spread", f.spread},
                       {"distinct_optima", f.distinct_optima}});
      code = std::max(code, check_certificate(f.best.cert));
    }
    sink.csv("ladder", table);
    sink.json("minimize", {{"mode", mode}, {"target", target_s}, {"ladder", rungs}});
    return code;
  }
  throw SchemaError("mode", "expected s, full or ladder");
}

// ---- euclidean free-energy -------------------------------------------------------------

int euclidean_free_energy(const GlobalOptions& g, const std::string& config) {
  const json cfg = io::read_file(config);
  io::expect_object(cfg, "", {"model", "box_m", "region", "levels", "grid", "refine_passes", "truncation_tol", "options"});
  const EuclideanModelSpec spec = io::parse_euclidean(io::require(cfg, "model", ""), "model");
  const auto n = static_cast<Eigen::Index>(spec.lattice.site_count());
  SupOptions opt;
  opt.inner = optimize_options(cfg, g);
  if (!io::has(cfg, "options")) opt.inner.multistart = 4;
  opt.box_m = opt_number(cfg, "box_m", opt.box_m);
  if (!(opt.box_m > 0.0 && opt.box_m < 1.0)) throw SchemaError("box_m", "expected 0 < m < 1");
  if (io::has(cfg, "region")) {
    const json& r = cfg["region"];
    io::expect_object(r, "region", {"lo", "hi"});
    const Vector lo = io::vector(io::require(r, "lo", "region"), "region.lo");
    const Vector hi = io::vector(io::require(r, "hi", "region"), "region.hi");
    check_sites(lo.size(), n, "region.lo");
    check_sites(hi.size(), n, "region.hi");
    if ((lo.array() <= 0.0).any() || (hi.array() < lo.array()).any())
      throw SchemaError("region", "expected 0 < lo <= hi");
    opt.region = std::make_pair(lo, hi);
  }
  opt.levels = positive(opt_integer(cfg, "levels", opt.levels), "levels");
  opt.grid = positive(opt_integer(cfg, "grid", opt.grid), "grid");
  opt.refine_passes = opt_integer(cfg, "refine_passes", opt.refine_passes);
  opt.truncation_tol = opt_number(cfg, "truncation_tol", opt.truncation_tol);

  const SupSolution sol = sup_over_q(spec, opt);
  std::vector<std::string> header;
  for (Eigen::Index x = 0; x < n; ++x) header.push_back("q" + std::to_string(x));
  header.push_back("value");
  io::Csv table(header);
  for (const SupPoint& pt : sol.table) {
    std::vector<double> row(pt.q.data(), pt.q.data() + pt.q.size());
    row.push_back(pt.value);
    table.row(row);
  }
  Sink sink(g);
  sink.csv("surface", table);
  sink.json("free_energy", {{"q_star", io::to_json(sol.q)},
                            {"value", sol.value},
                            {"annealed_limit", annealed_limit(spec)},
                            {"truncation_tail", sol.truncation_tail},
                            {"certificate", io::to_json(sol.cert)},
                            {"profile", io::to_json(sol.inner.best)},
                            {"inner_spread", sol.inner.spread},
                            {"evaluations", sol.table.size()}});
  return sol.cert.converged || sol.cert.best_effort ? kOk : kNumericError;
}

// ---- rpc -------------------------------------------------------------------------------

int rpc_verify_yb(const GlobalOptions& g, const std::string& config) {
  const json cfg = io::read_file(config);
  io::expect_object(cfg, "", {"model", "profile", "b", "v", "nodes"});
  const SphericalModelSpec spec = io::parse_spherical(io::require(cfg, "model", ""), "model");
  const io::Profile prof = io::parse_profile(io::require(cfg, "profile", ""), "profile");
  const PanchenkoProfile& p = need_panchenko(prof);
  const Eigen::Index n = spec.D.rows();
  check_sites(p.sites(), n, "profile");
  // Default b sits two units inside the domain D + b - d^0 > 0.
  const Vector b = io::has(cfg, "b") ? site_vector(cfg, "b", n)
                                     : Vector(step_d(to_steps(p), spec.xi).col(0) + Vector::Constant(n, 2.0));
  const Vector v = io::has(cfg, "v") ? site_vector(cfg, "v", n) : spec.h;
  const double closed = y_b_closed_form(spec, p, b, v);
  const RecursionResult num = y_b_numeric(spec, p, b, v, recursion_options(cfg, g));
  const double tol = g.tol.value_or(1e-6);
  const double rel = std::abs(closed - num.value) / std::max(std::abs(num.value), 1e-300);
  const bool ok = rel < tol;
  Sink(g).json("verify_yb", {{"b", io::to_json(b)},
                             {"v", io::to_json(v)},
                             {"closed_form", closed},
                             {"recursion", io::to_json(num)},
                             {"relative_error", rel},
                             {"tolerance", tol},
                             {"agree", ok}});
  return ok ? kOk : kCheckFailed;
}

int rpc_a_m(const GlobalOptions& g, const std::string& config) {
  const json cfg = io::read_file(config);
  io::expect_object(cfg, "", {"model", "profile", "nodes", "max_torus_points"});
  const SphericalModelSpec spec = io::parse_spherical(io::require(cfg, "model", ""), "model");
  const io::Profile prof = io::parse_profile(io::require(cfg, "profile", ""), "profile");
  const PanchenkoProfile& p = need_panchenko(prof);
  check_sites(p.sites(), spec.D.rows(), "profile");
  Gamma1Options opt;
  opt.recursion = recursion_options(cfg, g);
  opt.max_torus_points = positive(opt_integer(cfg, "max_torus_points", opt.max_torus_points), "max_torus_points");
  if (g.tol) opt.torus_tol = *g.tol;
  const AMTrend trend = a_m_trend(spec, p, opt);

  io::Csv table({"M", "gamma1", "gamma1_error", "gamma2", "A_M", "monte_carlo"});
  json rows = json::array();
  for (const AMRow& r : trend.rows) {
    const bool mc = r.method == RecursionMethod::MonteCarlo;
    table.row({static_cast<double>(r.M), r.gamma1, r.gamma1_error, r.gamma2, r.value, mc ? 1.0 : 0.0});
    rows.push_back({{"M", r.M},
                    {"gamma1", r.gamma1},
                    {"gamma1_error", r.gamma1_error},
                    {"gamma2", r.gamma2},
                    {"A_M", r.value},
                    {"method", mc ? "monte-carlo" : "gauss-hermite"}});
  }
  Sink sink(g);
  sink.csv("a_m", table);
  sink.json("a_m", {{"rows", rows}, {"w_inf", trend.w_inf}, {"a_limit", trend.a_limit}});
  return kOk;
}

// ---- mc --------------------------------------------------------------------------------

int mc_covariance(const GlobalOptions& g, const std::string& config) {
  const json cfg = io::read_file(config);
  io::expect_object(cfg, "", {"kind", "xi", "B", "N", "pairs", "samples", "features"});
  const std::string kind = io::text(io::require(cfg, "kind", ""), "kind");
  const int N = positive(io::integer(io::require(cfg, "N", ""), "N"), "N");
  const long samples = positive(opt_integer(cfg, "samples", 10000), "samples");
  const json& pairs = io::require(cfg, "pairs", "");
  if (!pairs.is_array() || pairs.empty()) throw SchemaError("pairs", "expected a nonempty array");

  const double z_band = g.tol.value_or(4.0);
  io::Csv table({"pair", "target", "mean", "standard_error", "z_score"});
  json rows = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string path = "pairs[" + std::to_string(i) + "]";
    CovarianceEstimate est;
    if (kind == "spherical") {
      if (io::has(cfg, "B") || io::has(cfg, "features")) throw SchemaError("B", "not used by the spherical sampler");
      io::expect_object(pairs[i], path, {"sigma", "tau"});
      const MixingFunction xi = io::parse_mixing(io::require(cfg, "xi", ""), "xi");
      const Vector s = io::vector(io::require(pairs[i], "sigma", path), path + ".sigma");
      const Vector t = io::vector(io::require(pairs[i], "tau", path), path + ".tau");
      check_sites(s.size(), N, path + ".sigma");
      check_sites(t.size(), N, path + ".tau");
      est = spherical_covariance(xi, N, s, t, samples, g.seed, g.threads);
    } else if (kind == "euclidean") {
      if (io::has(cfg, "xi")) throw SchemaError("xi", "not used by the euclidean sampler");
      io::expect_object(pairs[i], path, {"u", "v"});
      const CorrelationFunction B = io::parse_correlation(io::require(cfg, "B", ""), "B");
      const int K = positive(opt_integer(cfg, "features", 4096), "features");
      const Vector u = io::vector(io::require(pairs[i], "u", path), path + ".u");
      const Vector v = io::vector(io::require(pairs[i], "v", path), path + ".v");
      check_sites(u.size(), N, path + ".u");
      check_sites(v.size(), N, path + ".v");
      est = euclidean_covariance(B, N, u, v, samples, K, g.seed, g.threads);
    } else {
      throw SchemaError("kind", "expected spherical or euclidean");
    }
    ok = ok && std::abs(est.z_score) <= z_band;
    table.row({static_cast<double>(i), est.target, est.mean, est.standard_error, est.z_score});
    rows.push_back(io::to_json(est));
  }
  Sink sink(g);
  sink.csv("covariance", table);
  sink.json("covariance", {{"kind", kind}, {"estimates", rows}, {"z_band", z_band}, {"within_band", ok}});
  return ok ? kOk : kCheckFailed;
}

int mc_h_shift(const GlobalOptions& g, const std::string& config) {
  const json cfg = io::read_file(config);
  io::expect_object(cfg, "", {"lattice", "B", "h", "N", "points", "features"});
  const LatticeSpec lat = io::parse_lattice(io::require(cfg, "lattice", ""), "lattice");
  const CorrelationFunction B = io::parse_correlation(io::require(cfg, "B", ""), "B");
  const double h = io::number(io::require(cfg, "h", ""), "h");
  const int N = positive(io::integer(io::require(cfg, "N", ""), "N"), "N");
  const int count = positive(opt_integer(cfg, "points", 100), "points");
  const int K = positive(opt_integer(cfg, "features", 512), "features");
  const auto n = static_cast<int>(lat.site_count());

  std::vector<FieldRealization> fields;
  for (int x = 0; x < n; ++x) fields.push_back(sample_euclidean_V(B, N, K, g.seed, static_cast<std::uint64_t>(x)));
  auto rng = make_rng(g.seed, RngTag::Trial, 0);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::vector<Matrix> points;
  for (int k = 0; k < count; ++k) {
    Matrix u(N, n);
    for (int a = 0; a < N; ++a)
      for (int x = 0; x < n; ++x) u(a, x) = unif(rng);
    points.push_back(std::move(u));
  }
  const HShiftReport rep = h_shift_identity_check(lat, fields, h, points);
  Sink(g).json("h_shift", io::to_json(rep));
  return rep.passed ? kOk : kCheckFailed;
}

int mc_free_energy_demo(const GlobalOptions& g, const std::string& config) {
  const json cfg = io::read_file(config);
  io::expect_object(cfg, "", {"model", "N", "draws", "nodes"});
  const SphericalModelSpec spec = io::parse_spherical(io::require(cfg, "model", ""), "model");
  FreeEnergyOptions opt;
  opt.seed = g.seed;
  opt.threads = g.threads;
  opt.N = opt_integer(cfg, "N", opt.N);
  opt.draws = positive(opt_integer(cfg, "draws", opt.draws), "draws");
  opt.nodes = positive(opt_integer(cfg, "nodes", opt.nodes), "nodes");
  const FreeEnergyEstimate est = free_energy_quadrature(spec, opt);

  io::Csv table({"draw", "value"});
  for (std::size_t i = 0; i < est.per_draw.size(); ++i) table.row({static_cast<double>(i), est.per_draw[i]});
  Sink sink(g);
  sink.csv("draws", table);
  sink.json("free_energy_demo", {{"label", "DEMO: finite N, no convergence claim"},
                                 {"N", opt.N},
                                 {"draws", opt.draws},
                                 {"mean", est.mean},
                                 {"standard_error", est.standard_error},
                                 {"log_z_variance", est.log_z_variance},
                                 {"deterministic", est.deterministic},
                                 {"annealed", est.annealed},
                                 {"jensen_allowance", est.jensen_allowance},
                                 {"points", est.points}});
  return kOk;
}

// ---- verify ----------------------------------------------------------------------------

int verify(const GlobalOptions& g, const std::string& suite, bool enforce_budget) {
  const std::vector<std::string> ids = verify::select(suite);
  verify::VerifyOptions opt;
  opt.seed = g.seed;
  opt.threads = g.threads;
  opt.tolerance = g.tol;
  opt.enforce_budget = enforce_budget;

  json results = json::array();
  std::vector<std::string> failed;
  verify::run(ids, opt, [&](const verify::CriterionResult& r) {
    std::printf("%s\n", verify::format_line(r).c_str());
    std::fflush(stdout);
    if (!r.passed) failed.push_back(r.id);
    results.push_back({{"id", r.id},
                       {"passed", r.passed},
                       {"measured", r.measured},
                       {"tolerance", r.tolerance},
                       {"comparison", r.comparison == verify::Comparison::Below ? "below" : "above"},
                       {"cases", r.cases},
                       {"failures", r.failures},
                       {"seconds", r.seconds},
                       {"budget_seconds", r.budget_seconds},
                       {"detail", r.detail}});
  });
  std::string list;
  for (const std::string& id : failed) list += (list.empty() ? "" : ", ") + id;
  std::printf("%zu criteria, %zu failed%s\n", ids.size(), failed.size(), failed.empty() ? "" : (": " + list).c_str());
  if (!g.out.empty()) {
    std::filesystem::create_directories(g.out);
    std::ofstream f(std::filesystem::path(g.out) / "verify.json", std::ios::binary);
    f << json({{"suite", suite}, {"seed", g.seed}, {"results", results}, {"failed", failed}}).dump(2) << '\n';
  }
  return failed.empty() ? kOk : kCheckFailed;
}

}  // namespace elman::cli
