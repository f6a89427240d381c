#include "elman/cli/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "elman/error.hpp"

namespace elman::io {

SchemaError::SchemaError(std::string field, const std::string& message)
    : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw SchemaError("line " + std::to_string(line) + ", column " + std::to_string(column), "malformed JSON");
  }
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_document(buf.str());
}

// ---- strict field access ---------------------------------------------------------------

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "(root)" : path, "expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) throw SchemaError(join(path, item.key().c_str()), "unknown key");
  }
}

const json& require(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(join(path, key), "missing required key");
  return *it;
}

bool has(const json& obj, const char* key) { return obj.contains(key); }

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw SchemaError(path, "expected true or false");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

Vector vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Matrix matrix(const json& j, const std::string& path, long cols) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of rows");
  const long rows = static_cast<long>(j.size());
  if (rows > 0 && cols < 0) {
    if (!j[0].is_array()) throw SchemaError(path + "[0]", "expected an array of numbers");
    cols = static_cast<long>(j[0].size());
  }
  Matrix m(rows, std::max(cols, 0L));
  for (long r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const Vector row = vector(j[r], rp);
    if (row.size() != cols) throw SchemaError(rp, "expected " + std::to_string(cols) + " entries");
    m.row(r) = row.transpose();
  }
  return m;
}

// ---- model types -----------------------------------------------------------------------

MixingFunction parse_mixing(const json& j, const std::string& path) {
  expect_object(j, path, {"coeffs"});
  MixingFunction xi;
  const Vector c = vector(require(j, "coeffs", path), join(path, "coeffs"));
  xi.coeffs.assign(c.data(), c.data() + c.size());
  for (std::size_t p = 0; p < xi.coeffs.size(); ++p)
    if (xi.coeffs[p] < 0.0) throw SchemaError(join(path, "coeffs") + "[" + std::to_string(p) + "]", "must be nonnegative");
  return xi;
}

CorrelationFunction parse_correlation(const json& j, const std::string& path) {
  expect_object(j, path, {"c0", "atoms"});
  CorrelationFunction b;
  if (has(j, "c0")) b.c0 = number(j["c0"], join(path, "c0"));
  if (has(j, "atoms")) {
    const Matrix atoms = matrix(j["atoms"], join(path, "atoms"), 2);
    for (Eigen::Index i = 0; i < atoms.rows(); ++i) b.atoms.emplace_back(atoms(i, 0), atoms(i, 1));
  }
  try {
    validate(b);
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  return b;
}

LatticeSpec parse_lattice(const json& j, const std::string& path) {
  expect_object(j, path, {"L", "d", "mu", "t"});
  LatticeSpec lat;
  lat.L = integer(require(j, "L", path), join(path, "L"));
  if (has(j, "d")) lat.d = integer(j["d"], join(path, "d"));
  lat.mu = number(require(j, "mu", path), join(path, "mu"));
  lat.t = number(require(j, "t", path), join(path, "t"));
  try {
    validate_lattice(lat);
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  return lat;
}

SphericalModelSpec parse_spherical(const json& j, const std::string& path) {
  expect_object(j, path, {"D", "xi", "h"});
  SphericalModelSpec spec;
  spec.D = matrix(require(j, "D", path), join(path, "D"));
  const Eigen::Index n = spec.D.rows();
  if (spec.D.cols() != n || n == 0) throw SchemaError(join(path, "D"), "expected a nonempty square matrix");
  const json& xi = require(j, "xi", path);
  const std::string xp = join(path, "xi");
  if (xi.is_object()) {
    spec.xi.assign(n, parse_mixing(xi, xp));
  } else {
    if (!xi.is_array() || static_cast<Eigen::Index>(xi.size()) != n)
      throw SchemaError(xp, "expected one mixing object or one per site");
    for (std::size_t x = 0; x < xi.size(); ++x) spec.xi.push_back(parse_mixing(xi[x], xp + "[" + std::to_string(x) + "]"));
  }
  spec.h = has(j, "h") ? vector(j["h"], join(path, "h")) : Vector::Zero(n);
  if (spec.h.size() != n) throw SchemaError(join(path, "h"), "expected one entry per site");
  try {
    validate(spec);
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  return spec;
}

EuclideanModelSpec parse_euclidean(const json& j, const std::string& path) {
  expect_object(j, path, {"lattice", "B", "h", "beta"});
  EuclideanModelSpec spec;
  spec.lattice = parse_lattice(require(j, "lattice", path), join(path, "lattice"));
  spec.B = parse_correlation(require(j, "B", path), join(path, "B"));
  if (has(j, "h")) spec.h = number(j["h"], join(path, "h"));
  if (has(j, "beta")) spec.beta = number(j["beta"], join(path, "beta"));
  try {
    validate(spec);
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  return spec;
}

namespace {

template <class P>
P checked(P p, const std::string& path) {
  const std::vector<std::string> v = validate(p);
  if (!v.empty()) throw SchemaError(path, v.front());
  return p;
}

}  // namespace

TalagrandProfile parse_talagrand(const json& j, const std::string& path) {
  expect_object(j, path, {"form", "m", "s", "extended"});
  TalagrandProfile p;
  const Vector m = vector(require(j, "m", path), join(path, "m"));
  p.m.assign(m.data(), m.data() + m.size());
  if (p.m.size() < 2) throw SchemaError(join(path, "m"), "expected 0 = m_0 < ... < m_r = 1 with r >= 1");
  p.s = matrix(require(j, "s", path), join(path, "s"), static_cast<long>(p.m.size()) - 1);
  if (has(j, "extended")) p.extended = boolean(j["extended"], join(path, "extended"));
  return checked(std::move(p), path);
}

PanchenkoProfile parse_panchenko(const json& j, const std::string& path) {
  expect_object(j, path, {"form", "t", "q", "sites"});
  PanchenkoProfile p;
  const Vector t = vector(require(j, "t", path), join(path, "t"));
  p.t.assign(t.data(), t.data() + t.size());
  if (p.t.size() < 2) throw SchemaError(join(path, "t"), "expected 0 < t_0 < ... < t_r = 1 with r >= 1");
  const long inner = static_cast<long>(p.t.size()) - 2;
  if (inner == 0) {
    // No interior breakpoints: the site count cannot be read from q.
    const int n = has(j, "sites") ? integer(j["sites"], join(path, "sites")) : 1;
    if (n < 1) throw SchemaError(join(path, "sites"), "must be positive");
    p.q.resize(n, 0);
    if (has(j, "q")) {
      const Matrix q = matrix(j["q"], join(path, "q"), 0);
      if (q.rows() != 0) p.q.resize(q.rows(), 0);
    }
  } else {
    p.q = matrix(require(j, "q", path), join(path, "q"), inner);
  }
  return checked(std::move(p), path);
}

ContinuumProfile parse_continuum(const json& j, const std::string& path) {
  expect_object(j, path, {"form", "atoms", "nodes", "phi", "caps", "q_star", "extended"});
  ContinuumProfile c;
  const Matrix atoms = matrix(require(j, "atoms", path), join(path, "atoms"), 2);
  for (Eigen::Index i = 0; i < atoms.rows(); ++i) c.atoms.emplace_back(atoms(i, 0), atoms(i, 1));
  const Vector nodes = vector(require(j, "nodes", path), join(path, "nodes"));
  c.nodes.assign(nodes.data(), nodes.data() + nodes.size());
  c.phi = matrix(require(j, "phi", path), join(path, "phi"), static_cast<long>(c.nodes.size()));
  c.caps = has(j, "caps") ? vector(j["caps"], join(path, "caps")) : Vector::Ones(c.phi.rows());
  c.q_star = number(require(j, "q_star", path), join(path, "q_star"));
  if (has(j, "extended")) c.extended = boolean(j["extended"], join(path, "extended"));
  return checked(std::move(c), path);
}

Profile parse_profile(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected a profile object");
  const std::string form = text(require(j, "form", path), join(path, "form"));
  if (form == "talagrand") return parse_talagrand(j, path);
  if (form == "panchenko") return parse_panchenko(j, path);
  if (form == "continuum") return parse_continuum(j, path);
  throw SchemaError(join(path, "form"), "expected talagrand, panchenko or continuum");
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vector(m.row(r).transpose())));
  return a;
}

json to_json(const MixingFunction& xi) { return {{"coeffs", xi.coeffs}}; }

json to_json(const CorrelationFunction& b) {
  json atoms = json::array();
  for (const auto& [w, l] : b.atoms) atoms.push_back({w, l});
  return {{"c0", b.c0}, {"atoms", atoms}};
}

json to_json(const LatticeSpec& lat) { return {{"L", lat.L}, {"d", lat.d}, {"mu", lat.mu}, {"t", lat.t}}; }

json to_json(const SphericalModelSpec& spec) {
  json xi = json::array();
  for (const MixingFunction& x : spec.xi) xi.push_back(to_json(x));
  return {{"D", to_json(spec.D)}, {"xi", xi}, {"h", to_json(spec.h)}};
}

json to_json(const EuclideanModelSpec& spec) {
  return {{"lattice", to_json(spec.lattice)}, {"B", to_json(spec.B)}, {"h", spec.h}, {"beta", spec.beta}};
}

json to_json(const TalagrandProfile& p) {
  return {{"form", "talagrand"}, {"m", p.m}, {"s", to_json(p.s)}, {"extended", p.extended}};
}

json to_json(const PanchenkoProfile& p) {
  json j = {{"form", "panchenko"}, {"t", p.t}, {"q", to_json(p.q)}};
  if (p.q.cols() == 0) j["sites"] = p.q.rows();
  return j;
}

json to_json(const ContinuumProfile& c) {
  json atoms = json::array();
  for (const auto& [loc, mass] : c.atoms) atoms.push_back({loc, mass});
  return {{"form", "continuum"}, {"atoms", atoms},       {"nodes", c.nodes},   {"phi", to_json(c.phi)},
          {"caps", to_json(c.caps)}, {"q_star", c.q_star}, {"extended", c.extended}};
}

json to_json(const Profile& p) {
  return std::visit([](const auto& v) { return to_json(v); }, p);
}

// ---- results ---------------------------------------------------------------------------

json to_json(const DualPoint& p) {
  return {{"u", to_json(p.u)}, {"K", to_json(p.K)}, {"residual", p.residual}, {"iterations", p.iterations}};
}

json to_json(const EvaluationReport& r) {
  return {{"value", r.value}, {"terms", r.terms}, {"residuals", r.residuals}, {"domain_flags", r.domain_flags}};
}

json to_json(const Certificate& c) {
  return {{"value", c.value},
          {"residual_cs1", c.residual_cs1},
          {"residual_csb", c.residual_csb},
          {"gap_AB", c.gap_AB},
          {"residual_b", c.residual_b},
          {"projected_gradient", c.projected_gradient},
          {"iterations", c.iterations},
          {"converged", c.converged},
          {"best_effort", c.best_effort},
          {"kkt_flags", c.kkt_flags},
          {"notes", c.notes}};
}

json to_json(const ProfileSolution& s) {
  json j;
  j["profile"] = s.form == Parameterization::Talagrand ? to_json(s.talagrand) : to_json(s.panchenko);
  j["b"] = to_json(s.b);
  j["certificate"] = to_json(s.cert);
  return j;
}

json to_json(const RecursionResult& r) {
  return {{"value", r.value},
          {"error", r.error},
          {"method", r.method == RecursionMethod::GaussHermite ? "gauss-hermite" : "monte-carlo"},
          {"nodes", r.nodes},
          {"coarse_nodes", r.coarse_nodes},
          {"dimensions", r.dimensions},
          {"work", r.work}};
}

json to_json(const CovarianceEstimate& c) {
  return {{"target", c.target},
          {"mean", c.mean},
          {"standard_error", c.standard_error},
          {"z_score", c.z_score},
          {"samples", c.samples}};
}

json to_json(const HShiftReport& r) {
  return {{"max_error", r.max_error},
          {"tolerance", r.tolerance},
          {"cross_term_error", r.cross_term_error},
          {"points", r.points},
          {"passed", r.passed}};
}

// ---- CSV -------------------------------------------------------------------------------

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Csv::Csv(std::vector<std::string> header) : header_(std::move(header)) {}

void Csv::row(const std::vector<double>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) line += (i ? "," : "") + format_number(values[i]);
  rows_.push_back(std::move(line));
}

void Csv::row(const std::string& label, const std::vector<double>& values) {
  std::string line = label;
  for (double v : values) line += "," + format_number(v);
  rows_.push_back(std::move(line));
}

std::string Csv::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
  out += "\n";
  for (const std::string& r : rows_) out += r + "\n";
  return out;
}

}  // namespace elman::io
