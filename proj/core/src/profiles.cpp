#include "elman/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "elman/error.hpp"
#include "elman/quadrature.hpp"

namespace elman {
namespace {

constexpr double kMergeTol = 1e-14;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Builds a continuum profile from averaged locations, masses and per-site node values.
// Coincident locations are merged by adding masses.
ContinuumProfile assemble(std::vector<double> locations, std::vector<double> masses, const Matrix& site_values,
                          bool extended) {
  const Eigen::Index n = site_values.rows();
  ContinuumProfile c;
  c.caps = Vector::Ones(n);
  c.extended = extended;

  // Atoms, merged.
  for (std::size_t k = 0; k < locations.size(); ++k) {
    if (masses[k] <= 0.0) continue;
    if (!c.atoms.empty() && std::abs(c.atoms.back().first - locations[k]) <= kMergeTol)
      c.atoms.back().second += masses[k];
    else
      c.atoms.emplace_back(locations[k], masses[k]);
  }

  // Nodes 0, interior locations, 1 with their per-site values.
  std::vector<double> nodes{0.0};
  std::vector<Vector> values{Vector::Zero(n)};
  for (std::size_t k = 0; k < locations.size(); ++k) {
    const double loc = locations[k];
    if (loc <= kMergeTol || loc >= 1.0 - kMergeTol) continue;
    if (std::abs(nodes.back() - loc) <= kMergeTol) continue;
    nodes.push_back(loc);
    values.push_back(site_values.col(static_cast<Eigen::Index>(k)));
  }
  nodes.push_back(1.0);
  values.push_back(Vector::Ones(n));

  c.nodes = nodes;
  c.phi.resize(n, static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) c.phi.col(static_cast<Eigen::Index>(j)) = values[j];
  c.q_star = c.atoms.empty() ? 0.0 : c.atoms.back().first;
  return c;
}

std::size_t segment_index(const std::vector<double>& nodes, double s) {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), s);
  std::size_t j = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  return std::min(j, nodes.size() - 2);
}

}  // namespace

double TalagrandProfile::at(Eigen::Index x, int k) const {
  if (k <= 0) return 0.0;
  if (k > levels()) return 1.0;
  return s(x, k - 1);
}

double PanchenkoProfile::at(Eigen::Index x, int k) const {
  if (k <= 0) return 0.0;
  if (k >= levels()) return 1.0;
  return q(x, k - 1);
}

double ContinuumProfile::mass_below(double s) const {
  double acc = 0.0;
  for (const auto& [loc, mass] : atoms)
    if (loc <= s) acc += mass;
  return acc;
}

Vector ContinuumProfile::phi_at(double s) const {
  s = std::clamp(s, 0.0, q_total());
  const std::size_t j = segment_index(nodes, s);
  const double a = nodes[j], b = nodes[j + 1];
  const double lam = (s - a) / (b - a);
  return (1.0 - lam) * phi.col(static_cast<Eigen::Index>(j)) + lam * phi.col(static_cast<Eigen::Index>(j + 1));
}

Vector ContinuumProfile::phi_slope(double s) const {
  const std::size_t j = segment_index(nodes, std::clamp(s, 0.0, q_total()));
  return (phi.col(static_cast<Eigen::Index>(j + 1)) - phi.col(static_cast<Eigen::Index>(j))) / (nodes[j + 1] - nodes[j]);
}

std::vector<double> ContinuumProfile::breakpoints() const {
  std::vector<double> pts = nodes;
  for (const auto& atom : atoms) pts.push_back(std::clamp(atom.first, 0.0, q_total()));
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  for (double p : pts)
    if (out.empty() || p - out.back() > kMergeTol) out.push_back(p);
  return out;
}

StepProfile to_steps(const TalagrandProfile& p) {
  const int r = p.levels();
  StepProfile sp;
  sp.P.resize(p.sites(), r + 2);
  for (Eigen::Index x = 0; x < p.sites(); ++x)
    for (int k = 0; k <= r + 1; ++k) sp.P(x, k) = p.at(x, k);
  sp.w = p.m;
  return sp;
}

StepProfile to_steps(const PanchenkoProfile& p) {
  const int r = p.levels();
  StepProfile sp;
  sp.P.resize(p.sites(), r + 1);
  for (Eigen::Index x = 0; x < p.sites(); ++x)
    for (int k = 0; k <= r; ++k) sp.P(x, k) = p.at(x, k);
  sp.w.assign(p.t.begin(), p.t.end() - 1);
  return sp;
}

Matrix step_delta(const StepProfile& sp) {
  const int J = sp.segments();
  Matrix out = Matrix::Zero(sp.P.rows(), J + 1);
  for (int j = J - 1; j >= 0; --j) out.col(j) = out.col(j + 1) + sp.w[j] * (sp.P.col(j + 1) - sp.P.col(j));
  return out;
}

Matrix step_d(const StepProfile& sp, const std::vector<MixingFunction>& xi) {
  const int J = sp.segments();
  const Eigen::Index n = sp.P.rows();
  if (static_cast<Eigen::Index>(xi.size()) != n) throw Error(ErrorKind::InvalidInput, "one mixing function per site required");
  Matrix out = Matrix::Zero(n, J + 1);
  for (int j = J - 1; j >= 0; --j)
    for (Eigen::Index x = 0; x < n; ++x)
      out(x, j) = out(x, j + 1) + sp.w[j] * (xi[x].d1(sp.P(x, j + 1)) - xi[x].d1(sp.P(x, j)));
  return out;
}

LevelSequence delta_sequence(const TalagrandProfile& p) {
  const Matrix full = step_delta(to_steps(p));  // columns j = 0..r+1
  return {1, full.rightCols(full.cols() - 1)};
}

LevelSequence d_sequence(const TalagrandProfile& p, const std::vector<MixingFunction>& xi) {
  const Matrix full = step_d(to_steps(p), xi);
  return {1, full.rightCols(full.cols() - 1)};
}

LevelSequence d_sequence(const PanchenkoProfile& p, const std::vector<MixingFunction>& xi) {
  return {0, step_d(to_steps(p), xi)};
}

Vector delta_of(const ContinuumProfile& c, double s) {
  const std::vector<double> pts = c.breakpoints();
  Vector acc = Vector::Zero(c.sites());
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    const double a = std::max(pts[j], s), b = pts[j + 1];
    if (b <= a) continue;
    const double F = c.mass_below(0.5 * (a + b));
    if (F == 0.0) continue;
    acc += F * (c.phi_at(b) - c.phi_at(a));
  }
  return acc;
}

Vector d_of(const ContinuumProfile& c, const std::vector<MixingFunction>& xi, double s, int quad) {
  const Eigen::Index n = c.sites();
  if (static_cast<Eigen::Index>(xi.size()) != n) throw Error(ErrorKind::InvalidInput, "one mixing function per site required");
  const std::vector<double> pts = c.breakpoints();
  Vector acc = Vector::Zero(n);
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    const double a = std::max(pts[j], s), b = pts[j + 1];
    if (b <= a) continue;
    const double F = c.mass_below(0.5 * (a + b));
    if (F == 0.0) continue;
    const Vector slope = c.phi_slope(0.5 * (a + b));
    for (Eigen::Index x = 0; x < n; ++x) {
      if (slope(x) == 0.0) continue;
      acc(x) += F * slope(x) * quad::integrate([&](double u) { return xi[x].d2(c.phi_at(u)(x)); }, a, b, quad);
    }
  }
  return acc;
}

ContinuumProfile talagrand_to_continuum(const TalagrandProfile& p) {
  require_valid(p);
  const int r = p.levels();
  std::vector<double> locations(r), masses(r);
  for (int k = 1; k <= r; ++k) {
    locations[k - 1] = p.s.col(k - 1).mean();
    masses[k - 1] = p.m[k] - p.m[k - 1];
  }
  ContinuumProfile c = assemble(locations, masses, p.s, p.extended);
  return c;
}

ContinuumProfile panchenko_to_continuum(const PanchenkoProfile& p) {
  require_valid(p);
  const int r = p.levels();
  const Eigen::Index n = p.sites();
  std::vector<double> locations(r + 1), masses(r + 1);
  Matrix values(n, r + 1);
  for (int k = 0; k <= r; ++k) {
    for (Eigen::Index x = 0; x < n; ++x) values(x, k) = p.at(x, k);
    locations[k] = values.col(k).mean();
    masses[k] = p.t[k] - (k == 0 ? 0.0 : p.t[k - 1]);
  }
  ContinuumProfile c = assemble(locations, masses, values, true);
  c.q_star = 1.0;
  return c;
}

ContinuumProfile scale_to_caps(const ContinuumProfile& unit, const Vector& caps) {
  if (caps.size() != unit.sites() || (caps.array() <= 0.0).any())
    throw Error(ErrorKind::InvalidInput, "caps must be positive, one per site");
  const double qt = caps.mean();
  ContinuumProfile c = unit;
  for (double& s : c.nodes) s *= qt;
  c.nodes.back() = qt;
  for (auto& atom : c.atoms) atom.first *= qt;
  c.phi = caps.asDiagonal() * unit.phi;
  c.phi.col(c.phi.cols() - 1) = caps;
  c.caps = caps;
  c.q_star = unit.q_star * qt;
  return c;
}

ContinuumProfile normalize_caps(const ContinuumProfile& c) {
  const double qt = c.q_total();
  ContinuumProfile unit = c;
  for (double& s : unit.nodes) s /= qt;
  unit.nodes.back() = 1.0;
  for (auto& atom : unit.atoms) atom.first /= qt;
  unit.phi = c.caps.cwiseInverse().asDiagonal() * c.phi;
  unit.phi.col(unit.phi.cols() - 1).setOnes();
  unit.caps = Vector::Ones(c.sites());
  unit.q_star = c.q_star / qt;
  return unit;
}

double averaging_residual(const ContinuumProfile& c) {
  const double qt = c.q_total();
  double worst = 0.0;
  for (std::size_t j = 0; j < c.nodes.size(); ++j) {
    const double avg = (c.phi.col(static_cast<Eigen::Index>(j)).array() / c.caps.array()).mean();
    worst = std::max(worst, std::abs(avg - c.nodes[j] / qt));
  }
  return worst;
}

std::vector<std::string> validate(const TalagrandProfile& p) {
  std::vector<std::string> v;
  const int r = p.levels();
  if (r < 1) return {"m: need at least the endpoints m_0 = 0 and m_r = 1"};
  if (p.m.front() != 0.0) v.push_back("m[0]: must equal 0");
  if (p.m.back() != 1.0) v.push_back("m[" + std::to_string(r) + "]: must equal 1");
  for (int k = 1; k <= r; ++k)
    if (!(p.m[k] > p.m[k - 1])) v.push_back("m[" + std::to_string(k) + "]: ordering violation, m must be strictly increasing");
  if (p.s.rows() < 1) v.push_back("s: at least one site required");
  if (p.s.cols() != r) v.push_back("s: expected " + std::to_string(r) + " levels per site");
  if (!v.empty()) return v;
  for (Eigen::Index x = 0; x < p.s.rows(); ++x) {
    for (int k = 1; k <= r + 1; ++k) {
      const double lo = p.at(x, k - 1), hi = p.at(x, k);
      if (!std::isfinite(hi) || hi < lo)
        v.push_back("s[" + std::to_string(x) + "][" + std::to_string(k) + "]: monotonicity violation");
    }
    if (!p.extended && p.at(x, r) > 1.0 - kDomainEta)
      v.push_back("s[" + std::to_string(x) + "][" + std::to_string(r) + "]: domain violation, s^r = " + fmt(p.at(x, r)) +
                  " exceeds 1 - eta");
  }
  return v;
}

std::vector<std::string> validate(const PanchenkoProfile& p) {
  std::vector<std::string> v;
  const int r = p.levels();
  if (r < 1) return {"t: need t_0 and t_r = 1"};
  if (!(p.t.front() > 0.0)) v.push_back("t[0]: must be positive");
  if (p.t.back() != 1.0) v.push_back("t[" + std::to_string(r) + "]: must equal 1");
  for (int k = 1; k <= r; ++k)
    if (!(p.t[k] > p.t[k - 1])) v.push_back("t[" + std::to_string(k) + "]: ordering violation, t must be strictly increasing");
  if (p.q.cols() != r - 1) v.push_back("q: expected " + std::to_string(r - 1) + " interior levels per site");
  if (p.q.rows() < 1) v.push_back("q: at least one site required");
  if (!v.empty()) return v;
  for (Eigen::Index x = 0; x < p.q.rows(); ++x)
    for (int k = 1; k <= r; ++k)
      if (!std::isfinite(p.at(x, k)) || p.at(x, k) < p.at(x, k - 1))
        v.push_back("q[" + std::to_string(x) + "][" + std::to_string(k) + "]: monotonicity violation");
  return v;
}

std::vector<std::string> validate(const ContinuumProfile& c) {
  std::vector<std::string> v;
  if (c.nodes.size() < 2) return {"nodes: need at least two nodes"};
  if (c.nodes.front() != 0.0) v.push_back("nodes[0]: must equal 0");
  for (std::size_t j = 1; j < c.nodes.size(); ++j)
    if (!(c.nodes[j] > c.nodes[j - 1])) v.push_back("nodes[" + std::to_string(j) + "]: must be strictly increasing");
  if (c.phi.cols() != static_cast<Eigen::Index>(c.nodes.size())) v.push_back("phi: one value per node required");
  if (c.caps.size() != c.phi.rows() || c.phi.rows() < 1) v.push_back("caps: one positive cap per site required");
  if (c.atoms.empty()) v.push_back("atoms: zeta needs at least one atom");
  if (!v.empty()) return v;
  const double qt = c.q_total();
  if (std::abs(qt - c.caps.mean()) > 1e-12 * std::max(1.0, qt)) v.push_back("nodes: last node must equal mean cap q_t");
  double total = 0.0;
  for (std::size_t i = 0; i < c.atoms.size(); ++i) {
    const auto [loc, mass] = c.atoms[i];
    if (!(mass > 0.0)) v.push_back("atoms[" + std::to_string(i) + "]: mass must be positive");
    if (loc < 0.0 || loc > qt) v.push_back("atoms[" + std::to_string(i) + "]: location outside [0, q_t]");
    if (i > 0 && !(loc > c.atoms[i - 1].first)) v.push_back("atoms[" + std::to_string(i) + "]: locations must be increasing");
    total += mass;
  }
  if (std::abs(total - 1.0) > 1e-12) v.push_back("atoms: masses sum to " + fmt(total) + ", expected 1");
  for (Eigen::Index x = 0; x < c.phi.rows(); ++x) {
    if (!(c.caps(x) > 0.0)) v.push_back("caps[" + std::to_string(x) + "]: must be positive");
    if (c.phi(x, 0) < 0.0) v.push_back("phi[" + std::to_string(x) + "][0]: must be >= 0");
    for (Eigen::Index j = 1; j < c.phi.cols(); ++j)
      if (c.phi(x, j) < c.phi(x, j - 1)) v.push_back("phi[" + std::to_string(x) + "][" + std::to_string(j) + "]: must be nondecreasing");
    if (std::abs(c.phi(x, c.phi.cols() - 1) - c.caps(x)) > 1e-12 * c.caps(x))
      v.push_back("phi[" + std::to_string(x) + "]: final value must equal the cap");
  }
  if (averaging_residual(c) > 1e-12) v.push_back("phi: averaging constraint residual " + fmt(averaging_residual(c)));
  if (!c.extended) {
    if (c.q_star < c.atoms.back().first) v.push_back("q_star: zeta must carry full mass on [0, q_star]");
    if (!(c.q_star < qt)) v.push_back("q_star: must be below q_t");
    const Vector at = c.phi_at(c.q_star);
    for (Eigen::Index x = 0; x < at.size(); ++x)
      if (!(at(x) < c.caps(x) * (1.0 - kDomainEta)))
        v.push_back("q_star: domain violation, Phi_" + std::to_string(x) + "(q_star) reaches the cap");
  }
  return v;
}

namespace {
template <class P>
void require(const P& p, const char* what) {
  const auto v = validate(p);
  if (v.empty()) return;
  std::string msg = std::string(what) + " profile invalid:";
  bool domain = true;
  for (const auto& s : v) {
    msg += " " + s + ";";
    domain = domain && s.find("domain violation") != std::string::npos;
  }
  throw Error(domain ? ErrorKind::DomainViolation : ErrorKind::InvalidInput, msg);
}
}  // namespace

void require_valid(const TalagrandProfile& p) { require(p, "Talagrand"); }
void require_valid(const PanchenkoProfile& p) { require(p, "Panchenko"); }
void require_valid(const ContinuumProfile& c) { require(c, "continuum"); }

}  // namespace elman
