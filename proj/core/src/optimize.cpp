#include "elman/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "elman/error.hpp"
#include "elman/kdual.hpp"
#include "elman/quadrature.hpp"
#include "elman/random.hpp"
#include "parallel.hpp"

namespace elman {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTie = 1e-10;

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// ---- damped Newton in b ---------------------------------------------------------------

template <class ValueGrad, class Feasible>
BSolution newton_b(ValueGrad&& fg, Feasible&& ok, Vector b, double tol, double two_n) {
  const Eigen::Index n = b.size();
  BSolution out;
  Vector g;
  double f = fg(b, g);
  int it = 0;
  for (; it < 100; ++it) {
    if (two_n * max_abs(g) <= tol) break;
    Matrix H(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(b(j)));
      Vector bp = b, bm = b, gp, gm;
      bp(j) += h;
      bm(j) -= h;
      fg(bp, gp);
      if (ok(bm)) {
        fg(bm, gm);
        H.col(j) = (gp - gm) / (2.0 * h);
      } else {
        H.col(j) = (gp - g) / h;
      }
    }
    H = 0.5 * (H + H.transpose());
    Vector step;
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() == Eigen::Success)
      step = -llt.solve(g);
    else
      step = -g;
    const double slope = g.dot(step);
    bool accepted = false;
    double alpha = 1.0;
    for (int k = 0; k < 60 && !accepted; ++k, alpha *= 0.5) {
      const Vector bn = b + alpha * step;
      if (!ok(bn)) continue;
      Vector gn;
      double fn;
      try {
        fn = fg(bn, gn);
      } catch (const Error&) {
        continue;
      }
      const bool armijo = fn <= f + 1e-4 * alpha * slope;
      const bool flat = fn <= f + 1e-13 * std::max(1.0, std::abs(f)) && max_abs(gn) < max_abs(g);
      if (armijo || flat) {
        b = bn;
        f = fn;
        g = gn;
        accepted = true;
      }
    }
    if (!accepted) break;
  }
  out.b = std::move(b);
  out.value = f;
  out.residual = two_n * max_abs(g);
  out.iterations = it;
  return out;
}

bool strict_convexity_holds(const SphericalModelSpec& spec, const Vector& d0) {
  bool xi_prime_zero = false;
  for (const MixingFunction& xi : spec.xi) {
    if (xi.d2(1.0) == 0.0) return false;
    if (xi.d1(0.0) == 0.0) xi_prime_zero = true;
  }
  return !xi_prime_zero || d0.minCoeff() > 0.0;
}

bool pd_shift(const Matrix& D, const Vector& shift) {
  Matrix M = D;
  M.diagonal() += shift;
  return is_positive_definite(M);
}

BSolution finish_b(BSolution sol, double tol, bool best_effort) {
  sol.best_effort = best_effort;
  if (!(sol.residual <= std::max(tol, 1e-9)) && !best_effort)
    throw Error(ErrorKind::NoConvergence, "b critical equation not solved", sol.residual);
  return sol;
}

// ---- profile layouts ------------------------------------------------------------------

// Packed variables: the free weights, then each site's interior breakpoints p^1..p^{J-1}.
struct Layout {
  Parameterization form = Parameterization::Talagrand;
  Target target = Target::B;
  Eigen::Index n = 0;
  int J = 0;
  std::vector<int> wfree;
  StepProfile base;
  double p_upper = 1.0;
  double wlo = 0.0, whi = 1.0, sep = 0.0;

  int nw() const { return static_cast<int>(wfree.size()); }
  int chain() const { return J - 1; }
  int size() const { return nw() + static_cast<int>(n) * chain(); }
  int at(Eigen::Index x, int col) const { return nw() + static_cast<int>(x) * chain() + (col - 1); }
};

Layout make_layout(const SphericalModelSpec& spec, Parameterization form, Target target, int levels, bool weights_free,
                   const OptimizeOptions& opt) {
  Layout L;
  L.form = form;
  L.target = target;
  L.n = spec.sites();
  L.wlo = opt.weight_margin;
  L.whi = 1.0 - opt.weight_margin;
  L.sep = opt.weight_separation;
  if (form == Parameterization::Talagrand) {
    L.J = levels + 1;
    L.p_upper = 1.0 - kDomainEta;
    if (weights_free)
      for (int k = 1; k < levels; ++k) L.wfree.push_back(k);
  } else {
    if (target != Target::A) throw Error(ErrorKind::InvalidInput, "the Panchenko form supports target A only");
    L.J = levels;
    L.p_upper = 1.0;
    const int first = opt.first_weight ? 1 : 0;
    const int last = opt.last_weight ? levels - 1 : levels;
    if (opt.first_weight) L.wlo = std::max(L.wlo, *opt.first_weight + L.sep);
    if (opt.last_weight) L.whi = std::min(L.whi, *opt.last_weight - L.sep);
    if (weights_free)
      for (int k = first; k < last; ++k) L.wfree.push_back(k);
  }
  L.base.P = Matrix::Zero(L.n, L.J + 1);
  L.base.P.col(L.J).setOnes();
  L.base.w.assign(L.J, 0.0);
  if (form == Parameterization::Talagrand) {
    L.base.w[L.J - 1] = 1.0;
  } else {
    for (const auto& pin : {opt.first_weight, opt.last_weight})
      if (pin && !(*pin > 0.0 && *pin < 1.0)) throw Error(ErrorKind::InvalidInput, "pinned weights must lie in (0, 1)");
    if (opt.first_weight && opt.last_weight && (levels < 2 || !(*opt.first_weight < *opt.last_weight)))
      throw Error(ErrorKind::InvalidInput, "pinning both end weights needs two ordered weights");
    if (opt.first_weight) L.base.w.front() = *opt.first_weight;
    if (opt.last_weight) L.base.w.back() = *opt.last_weight;
  }
  return L;
}

Vector pack(const Layout& L, const StepProfile& sp) {
  Vector z(L.size());
  for (int i = 0; i < L.nw(); ++i) z(i) = sp.w[L.wfree[i]];
  for (Eigen::Index x = 0; x < L.n; ++x)
    for (int c = 1; c < L.J; ++c) z(L.at(x, c)) = sp.P(x, c);
  return z;
}

StepProfile unpack(const Layout& L, const Vector& z) {
  StepProfile sp = L.base;
  for (int i = 0; i < L.nw(); ++i) sp.w[L.wfree[i]] = z(i);
  for (Eigen::Index x = 0; x < L.n; ++x)
    for (int c = 1; c < L.J; ++c) sp.P(x, c) = z(L.at(x, c));
  return sp;
}

TalagrandProfile as_talagrand(const StepProfile& sp) {
  TalagrandProfile p;
  p.m = sp.w;
  p.s = sp.P.middleCols(1, sp.segments() - 1);
  return p;
}

PanchenkoProfile as_panchenko(const StepProfile& sp) {
  PanchenkoProfile p;
  p.t = sp.w;
  p.t.push_back(1.0);
  p.q = sp.P.middleCols(1, sp.segments() - 1);
  return p;
}

void project(const Layout& L, Vector& z) {
  const int nw = L.nw();
  if (nw > 0) {
    // Separated ordering becomes plain ordering after subtracting i * sep.
    for (int i = 0; i < nw; ++i) z(i) -= i * L.sep;
    project_monotone(z.data(), nw, L.wlo, L.whi - (nw - 1) * L.sep);
    for (int i = 0; i < nw; ++i) z(i) += i * L.sep;
  }
  for (Eigen::Index x = 0; x < L.n; ++x)
    if (L.chain() > 0) project_monotone(z.data() + L.at(x, 1), L.chain(), 0.0, L.p_upper);
}

bool feasible(const Layout& L, const Vector& z) {
  Vector p = z;
  project(L, p);
  return (p - z).cwiseAbs().maxCoeff() <= 1e-15;
}

// ---- objective ------------------------------------------------------------------------

struct Point {
  Vector z;
  Vector g;
  double f = kInf;
  bool ok = false;
};

class Objective {
 public:
  Objective(const SphericalModelSpec& spec, const Layout& L, double b_tol) : spec_(spec), L_(L), b_tol_(b_tol) {}

  Point operator()(const Vector& z) {
    Point p;
    p.z = z;
    try {
      const StepProfile sp = unpack(L_, z);
      p.g.resize(L_.size());
      if (L_.target == Target::B) {
        const BGradient bg = b_value_gradient(spec_, as_talagrand(sp));
        p.f = bg.value;
        for (int i = 0; i < L_.nw(); ++i) p.g(i) = bg.dm(L_.wfree[i]);
        for (Eigen::Index x = 0; x < L_.n; ++x)
          for (int c = 1; c < L_.J; ++c) p.g(L_.at(x, c)) = bg.ds(x, c - 1);
      } else {
        const BSolution bs = minimize_b(spec_, sp, warm_b_, b_tol_);
        warm_b_ = bs.b;
        const AGradient ag = a_value_gradient(spec_, sp, bs.b);
        p.f = ag.value;
        for (int i = 0; i < L_.nw(); ++i) p.g(i) = ag.dw(L_.wfree[i]);
        for (Eigen::Index x = 0; x < L_.n; ++x)
          for (int c = 1; c < L_.J; ++c) p.g(L_.at(x, c)) = ag.dP(x, c);
      }
      p.ok = std::isfinite(p.f) && p.g.allFinite();
    } catch (const Error&) {
      p.ok = false;
      p.f = kInf;
    }
    return p;
  }

 private:
  const SphericalModelSpec& spec_;
  const Layout& L_;
  double b_tol_;
  std::optional<Vector> warm_b_;
};

double projected_gradient(const Layout& L, const Point& p) {
  Vector t = p.z - p.g;
  project(L, t);
  return max_abs(t - p.z);
}

// Spectral projected gradient with a nonmonotone Armijo search; returns the best iterate.
Point spg(Objective& obj, const Layout& L, Point p, const OptimizeOptions& opt, int& iterations) {
  Point best = p;
  std::vector<double> history{p.f};
  std::vector<double> best_history{p.f};
  double pg = projected_gradient(L, p);
  double lambda = std::clamp(1.0 / std::max(pg, 1e-12), 1e-10, 1e6);
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (pg <= opt.gradient_tol) break;
    Vector d = p.z - lambda * p.g;
    project(L, d);
    d -= p.z;
    const double gd = p.g.dot(d);
    if (!(gd < 0.0)) break;
    const double fref = *std::max_element(history.end() - std::min<std::size_t>(history.size(), 10), history.end());
    double alpha = 1.0;
    Point next;
    bool accepted = false;
    for (int k = 0; k < 50; ++k) {
      next = obj(p.z + alpha * d);
      if (next.ok && next.f <= fref + 1e-4 * alpha * gd) {
        accepted = true;
        break;
      }
      double shrink = 0.5;
      if (next.ok) {
        const double denom = 2.0 * (next.f - p.f - alpha * gd);
        if (denom > 0.0) shrink = std::clamp(-gd * alpha / denom, 0.1, 0.5);
      }
      alpha *= shrink;
    }
    if (!accepted) break;
    ++iterations;
    const Vector s = next.z - p.z;
    const Vector y = next.g - p.g;
    const double sy = s.dot(y);
    lambda = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e6) : 1e6;
    p = std::move(next);
    pg = projected_gradient(L, p);
    history.push_back(p.f);
    if (p.f < best.f) best = p;
    best_history.push_back(best.f);
    const std::size_t h = best_history.size();
    if (h > 5 && best_history[h - 6] - best_history[h - 1] < opt.value_tol) break;
  }
  return best;
}

// Groups of coordinates that move together on the current face; bound-active groups are dropped.
std::vector<std::vector<int>> free_groups(const Layout& L, const Vector& z) {
  std::vector<std::vector<int>> groups;
  const int nw = L.nw();
  for (int i = 0; i < nw;) {
    int j = i;
    while (j + 1 < nw && z(j + 1) - z(j) <= L.sep + kTie) ++j;
    const bool low = z(i) - i * L.sep <= L.wlo + kTie;
    const bool high = z(j) + (nw - 1 - j) * L.sep >= L.whi - kTie;
    if (!low && !high) {
      std::vector<int> g(j - i + 1);
      std::iota(g.begin(), g.end(), i);
      groups.push_back(std::move(g));
    }
    i = j + 1;
  }
  for (Eigen::Index x = 0; x < L.n; ++x) {
    for (int c = 1; c < L.J;) {
      int e = c;
      while (e + 1 < L.J && z(L.at(x, e + 1)) - z(L.at(x, e)) <= kTie) ++e;
      const bool low = z(L.at(x, c)) <= kTie;
      const bool high = z(L.at(x, e)) >= L.p_upper - kTie;
      if (!low && !high) {
        std::vector<int> g;
        for (int k = c; k <= e; ++k) g.push_back(L.at(x, k));
        groups.push_back(std::move(g));
      }
      c = e + 1;
    }
  }
  return groups;
}

Vector reduce(const std::vector<std::vector<int>>& groups, const Vector& g) {
  Vector out(static_cast<Eigen::Index>(groups.size()));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    double acc = 0.0;
    for (int k : groups[i]) acc += g(k);
    out(static_cast<Eigen::Index>(i)) = acc;
  }
  return out;
}

Vector expand(const std::vector<std::vector<int>>& groups, const Vector& v, Eigen::Index size) {
  Vector out = Vector::Zero(size);
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (int k : groups[i]) out(k) = v(static_cast<Eigen::Index>(i));
  return out;
}

// Modified Newton on the active face with a finite-difference Hessian of the analytic gradient.
Point polish(Objective& obj, const Layout& L, Point p, const OptimizeOptions& opt, int& iterations) {
  for (int it = 0; it < opt.polish_iterations; ++it) {
    const auto groups = free_groups(L, p.z);
    if (groups.empty()) break;
    const Vector gr = reduce(groups, p.g);
    if (max_abs(gr) <= 1e-14) break;
    const Eigen::Index k = gr.size();
    Matrix H = Matrix::Identity(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double h = 1e-6;
      Vector e = Vector::Zero(k);
      e(j) = 1.0;
      const Vector dir = expand(groups, e, p.z.size());
      const Vector zp = p.z + h * dir, zm = p.z - h * dir;
      const bool okp = feasible(L, zp), okm = feasible(L, zm);
      Point pp, pm;
      if (okp) pp = obj(zp);
      if (okm) pm = obj(zm);
      if (okp && okm && pp.ok && pm.ok)
        H.col(j) = reduce(groups, pp.g - pm.g) / (2.0 * h);
      else if (okp && pp.ok)
        H.col(j) = reduce(groups, pp.g - p.g) / h;
      else if (okm && pm.ok)
        H.col(j) = reduce(groups, p.g - pm.g) / h;
    }
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
    Vector ev = eig.eigenvalues();
    const double top = std::max(ev.maxCoeff(), 1e-12);
    for (Eigen::Index i = 0; i < k; ++i) ev(i) = std::max(ev(i), 1e-9 * top);
    const Vector step =
        -(eig.eigenvectors() * (eig.eigenvectors().transpose() * gr).cwiseQuotient(ev));
    const Vector dir = expand(groups, step, p.z.size());
    const double pg0 = projected_gradient(L, p);
    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < 30 && !accepted; ++ls, alpha *= 0.5) {
      Vector zn = p.z + alpha * dir;
      project(L, zn);
      Point next = obj(zn);
      if (!next.ok) continue;
      const double decrease = p.g.dot(zn - p.z);
      const bool armijo = next.f <= p.f + 1e-4 * std::min(decrease, 0.0) && next.f < p.f;
      const bool flat = next.f <= p.f + 1e-15 * std::max(1.0, std::abs(p.f)) && projected_gradient(L, next) < pg0;
      if (armijo || flat) {
        p = std::move(next);
        accepted = true;
      }
    }
    if (!accepted) break;
    ++iterations;
  }
  return p;
}

struct RunResult {
  Point point;
  int iterations = 0;
  bool converged = false;
};

RunResult run_from(const SphericalModelSpec& spec, const Layout& L, Vector z, const OptimizeOptions& opt) {
  Objective obj(spec, L, opt.b_tol);
  project(L, z);
  RunResult out;
  out.point = obj(z);
  if (!out.point.ok) return out;
  for (int round = 0; round < 4; ++round) {
    out.point = spg(obj, L, std::move(out.point), opt, out.iterations);
    out.point = polish(obj, L, std::move(out.point), opt, out.iterations);
    if (projected_gradient(L, out.point) <= opt.gradient_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// ---- certificates ---------------------------------------------------------------------

// Flags bound-active and tied breakpoints in columns [first_col, last_col]; labels add `offset`.
void chain_flags(const Matrix& P, int first_col, int last_col, double upper, const char* name, int offset,
                 std::vector<std::string>& flags) {
  for (Eigen::Index x = 0; x < P.rows(); ++x)
    for (int c = first_col; c <= last_col; ++c) {
      std::ostringstream os;
      const double v = P(x, c);
      if (v <= kTie)
        os << name << "^" << c + offset << "(" << x << ")=0";
      else if (v >= upper - kTie)
        os << name << "^" << c + offset << "(" << x << ")=upper";
      else if (c < last_col && P(x, c + 1) - v <= kTie)
        os << name << "^" << c + offset << "(" << x << ")=" << name << "^" << c + 1 + offset << "(" << x << ")";
      else
        continue;
      flags.push_back(os.str());
    }
}

void weight_flags(const Layout& L, const Vector& z, const char* name, std::vector<std::string>& flags) {
  for (int i = 0; i < L.nw(); ++i) {
    std::ostringstream os;
    if (z(i) - i * L.sep <= L.wlo + kTie || z(i) + (L.nw() - 1 - i) * L.sep >= L.whi - kTie)
      os << name << "_" << L.wfree[i] << "=bound";
    else if (i + 1 < L.nw() && z(i + 1) - z(i) <= L.sep + kTie)
      os << name << "_" << L.wfree[i] << "=" << name << "_" << L.wfree[i + 1];
    else
      continue;
    flags.push_back(os.str());
  }
}

ProfileSolution finalize(const SphericalModelSpec& spec, const Layout& L, const RunResult& run,
                         const OptimizeOptions& opt) {
  ProfileSolution sol;
  sol.form = L.form;
  sol.steps = unpack(L, run.point.z);
  if (L.form == Parameterization::Talagrand) {
    sol.talagrand = as_talagrand(sol.steps);
    sol.cert = certify(spec, sol.talagrand, opt.b_tol);
    try {
      sol.b = minimize_b(spec, sol.steps, std::nullopt, opt.b_tol).b;
    } catch (const Error& e) {
      sol.cert.notes.push_back(e.what());
    }
  } else {
    sol.panchenko = as_panchenko(sol.steps);
    chain_flags(sol.steps.P, 1, L.J - 1, L.p_upper, "q", 0, sol.cert.kkt_flags);
    sol.cert.notes.push_back("recursion residuals apply to the Talagrand form only");
    try {
      const BSolution bs = minimize_b(spec, sol.steps, std::nullopt, opt.b_tol);
      sol.b = bs.b;
      sol.cert.residual_b = bs.residual;
      sol.cert.best_effort = bs.best_effort;
    } catch (const Error& e) {
      sol.cert.best_effort = true;
      sol.cert.residual_b = std::isfinite(e.residual()) ? e.residual() : 0.0;
      sol.cert.notes.push_back(e.what());
    }
  }
  weight_flags(L, run.point.z, L.form == Parameterization::Talagrand ? "m" : "t", sol.cert.kkt_flags);
  sol.cert.value = run.point.f;
  sol.cert.iterations = run.iterations;
  sol.cert.converged = run.converged;
  sol.cert.projected_gradient = projected_gradient(L, run.point);
  return sol;
}

// ---- starts ---------------------------------------------------------------------------

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<Vector> latin_hypercube_starts(const Layout& L, int count, std::uint64_t seed) {
  std::vector<Vector> starts;
  if (count <= 0) return starts;
  const int dims = L.nw() + static_cast<int>(L.n) * L.J;
  std::mt19937_64 rng = make_rng(seed, RngTag::Multistart, 0);
  Matrix U(count, dims);
  std::vector<int> perm(count);
  for (int d = 0; d < dims; ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = count - 1; i > 0; --i) std::swap(perm[i], perm[rng() % static_cast<std::uint64_t>(i + 1)]);
    for (int i = 0; i < count; ++i) U(i, d) = (perm[i] + unit_draw(rng)) / count;
  }
  for (int i = 0; i < count; ++i) {
    Vector z(L.size());
    std::vector<double> w(L.nw());
    for (int k = 0; k < L.nw(); ++k) w[k] = L.wlo + U(i, k) * (L.whi - L.wlo);
    std::sort(w.begin(), w.end());
    for (int k = 0; k < L.nw(); ++k) z(k) = w[k];
    for (Eigen::Index x = 0; x < L.n; ++x) {
      const int base = L.nw() + static_cast<int>(x) * L.J;
      double total = 0.0;
      for (int j = 0; j < L.J; ++j) total += 0.05 + U(i, base + j);
      double acc = 0.0;
      for (int c = 1; c < L.J; ++c) {
        acc += 0.05 + U(i, base + c - 1);
        z(L.at(x, c)) = L.p_upper * acc / total;
      }
    }
    project(L, z);
    starts.push_back(std::move(z));
  }
  return starts;
}

// ---- 1-D maximization helpers for the outer problem -----------------------------------

template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

// ---- public API -----------------------------------------------------------------------

void project_monotone(double* v, int count, double lo, double hi) {
  if (count <= 0) return;
  std::vector<double> level;
  std::vector<int> width;
  level.reserve(count);
  width.reserve(count);
  for (int i = 0; i < count; ++i) {
    level.push_back(v[i]);
    width.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double w1 = width[width.size() - 2], w2 = width.back();
      const double merged = (w1 * level[level.size() - 2] + w2 * level.back()) / (w1 + w2);
      level.pop_back();
      width.pop_back();
      level.back() = merged;
      width.back() += static_cast<int>(w2);
    }
  }
  int i = 0;
  for (std::size_t b = 0; b < level.size(); ++b)
    for (int k = 0; k < width[b]; ++k) v[i++] = std::clamp(level[b], lo, hi);
}

BSolution minimize_b(const SphericalModelSpec& spec, const StepProfile& sp, const std::optional<Vector>& start,
                     double tol) {
  const Eigen::Index n = sp.P.rows();
  if (spec.sites() != n) throw Error(ErrorKind::InvalidInput, "profile and model have different site counts");
  const Vector d0 = step_d(sp, spec.xi).col(0);
  auto ok = [&](const Vector& b) { return b.allFinite() && pd_shift(spec.D, b - d0); };
  auto fg = [&](const Vector& b, Vector& g) {
    const AGradient a = a_value_gradient(spec, sp, b);
    g = a.db;
    return a.value;
  };
  Vector b0 = (start && start->size() == n && ok(*start)) ? *start : Vector(d0.array() + 1.0);
  const bool best_effort = !strict_convexity_holds(spec, d0);
  return finish_b(newton_b(fg, ok, std::move(b0), tol, 2.0 * static_cast<double>(n)), tol, best_effort);
}

BSolution minimize_b(const SphericalModelSpec& spec, const TalagrandProfile& p, const std::optional<Vector>& start,
                     double tol) {
  require_valid(p);
  return minimize_b(spec, to_steps(p), start, tol);
}

BSolution minimize_b(const SphericalModelSpec& spec, const PanchenkoProfile& p, const std::optional<Vector>& start,
                     double tol) {
  require_valid(p);
  return minimize_b(spec, to_steps(p), start, tol);
}

BSolution minimize_b(const SphericalModelSpec& spec, const ContinuumProfile& c, const std::optional<Vector>& start,
                     double tol, int quad) {
  const Eigen::Index n = c.sites();
  if (spec.sites() != n) throw Error(ErrorKind::InvalidInput, "profile and model have different site counts");
  const Vector d0 = d_of(c, spec.xi, 0.0, quad);
  auto ok = [&](const Vector& b) { return b.allFinite() && pd_shift(spec.D, b - d0); };
  auto fg = [&](const Vector& b, Vector& g) { return a_continuum_value_gradient(spec, c, b, g, quad); };
  Vector b0 = (start && start->size() == n && ok(*start)) ? *start : Vector(d0.array() + 1.0);
  const bool best_effort = !strict_convexity_holds(spec, d0);
  return finish_b(newton_b(fg, ok, std::move(b0), tol, 2.0 * static_cast<double>(n)), tol, best_effort);
}

Certificate certify(const SphericalModelSpec& spec, const TalagrandProfile& p, double b_tol) {
  require_valid(p);
  Certificate cert;
  const int r = p.levels();
  const Eigen::Index n = p.sites();
  const double upper = 1.0 - kDomainEta;
  chain_flags(p.s, 0, r - 1, upper, "s", 1, cert.kkt_flags);
  Vector b;
  double a_value = kInf;
  try {
    const BSolution bs = minimize_b(spec, p, std::nullopt, b_tol);
    b = bs.b;
    a_value = bs.value;
    cert.residual_b = bs.residual;
    cert.best_effort = bs.best_effort;
  } catch (const Error& e) {
    cert.best_effort = true;
    cert.notes.push_back(e.what());
    return cert;
  }
  bool in_domain = true;
  for (Eigen::Index x = 0; x < n; ++x) in_domain = in_domain && p.at(x, r) <= upper;
  if (!in_domain) {
    cert.value = a_value;
    cert.notes.push_back("B is undefined with a top level at 1");
    return cert;
  }
  const double b_value = eval_B_discrete(spec, p).value;
  cert.value = b_value;
  cert.gap_AB = std::abs(a_value - b_value);

  const LevelSequence delta = delta_sequence(p);
  std::vector<Vector> K(r + 1);
  for (int l = 1; l <= r; ++l) K[l] = solve_K(spec.D, delta.level(l)).K;
  double cs1 = 0.0;
  for (int l = 1; l < r; ++l)
    for (Eigen::Index x = 0; x < n; ++x) {
      if (p.at(x, l) <= kTie || p.at(x, l + 1) >= upper - kTie) continue;
      const double lhs = p.m[l] * (spec.xi[x].d1(p.at(x, l + 1)) - spec.xi[x].d1(p.at(x, l)));
      cs1 = std::max(cs1, std::abs(lhs - (K[l + 1](x) - K[l](x))));
    }
  cert.residual_cs1 = cs1;

  const Vector dr = d_sequence(p, spec.xi).level(r);
  Matrix M = spec.D;
  M.diagonal() += b - dr;
  const Matrix R = inverse_pd(M);
  double csb = 0.0;
  for (Eigen::Index x = 0; x < n; ++x) {
    if (p.at(x, r) >= upper - kTie) continue;
    csb = std::max(csb, std::abs(R(x, x) - (1.0 - p.at(x, r))));
  }
  cert.residual_csb = csb;
  return cert;
}

ProfileSolution minimize_s(const SphericalModelSpec& spec, const TalagrandProfile& start, Target target,
                           const OptimizeOptions& opt) {
  validate(spec);
  require_valid(start);
  const Layout L = [&] {
    Layout l = make_layout(spec, Parameterization::Talagrand, target, start.levels(), false, opt);
    l.base = to_steps(start);
    return l;
  }();
  const RunResult run = run_from(spec, L, pack(L, L.base), opt);
  if (!run.point.ok) throw Error(ErrorKind::NoConvergence, "objective undefined at the start profile");
  return finalize(spec, L, run, opt);
}

ProfileSolution minimize_s(const SphericalModelSpec& spec, const PanchenkoProfile& start, const OptimizeOptions& opt) {
  validate(spec);
  require_valid(start);
  const Layout L = [&] {
    Layout l = make_layout(spec, Parameterization::Panchenko, Target::A, start.levels(), false, opt);
    l.base = to_steps(start);
    return l;
  }();
  const RunResult run = run_from(spec, L, pack(L, L.base), opt);
  if (!run.point.ok) throw Error(ErrorKind::NoConvergence, "objective undefined at the start profile");
  return finalize(spec, L, run, opt);
}

FullSolution minimize_full(const SphericalModelSpec& spec, int levels, Target target, Parameterization form,
                           const OptimizeOptions& opt, const std::optional<ProfileSolution>& warm) {
  validate(spec);
  if (levels < 1) throw Error(ErrorKind::InvalidInput, "levels must be at least 1");
  const Layout L = make_layout(spec, form, target, levels, true, opt);
  const int total = std::max(1, opt.multistart);
  std::vector<Vector> starts;
  if (warm && warm->form == form && warm->steps.segments() == L.J && warm->steps.P.rows() == L.n) {
    Vector z = pack(L, warm->steps);
    project(L, z);
    starts.push_back(std::move(z));
  }
  for (Vector& z : latin_hypercube_starts(L, total - static_cast<int>(starts.size()), opt.seed))
    starts.push_back(std::move(z));

  std::vector<RunResult> runs(starts.size());
  detail::parallel_for(static_cast<int>(starts.size()), detail::thread_count(opt.threads),
                       [&](int i) { runs[i] = run_from(spec, L, starts[i], opt); });

  FullSolution out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out.start_values.push_back(runs[i].point.f);
    if (runs[i].point.f < runs[best].point.f) best = i;
  }
  if (!runs[best].point.ok) throw Error(ErrorKind::NoConvergence, "no start produced a finite value");
  std::vector<double> finite;
  for (double v : out.start_values)
    if (std::isfinite(v)) finite.push_back(v);
  std::sort(finite.begin(), finite.end());
  out.spread = finite.back() - finite.front();
  out.distinct_optima = 1;
  for (std::size_t i = 1; i < finite.size(); ++i)
    if (finite[i] - finite[i - 1] > 1e-6) ++out.distinct_optima;
  out.best = finalize(spec, L, runs[best], opt);
  if (out.distinct_optima > 1)
    out.best.cert.notes.push_back("multistart found " + std::to_string(out.distinct_optima) + " distinct optima");
  return out;
}

TalagrandProfile embed_next_level(const TalagrandProfile& p) {
  require_valid(p);
  const int r = p.levels();
  TalagrandProfile out;
  out.extended = p.extended;
  out.m.assign(p.m.begin(), p.m.end() - 1);
  out.m.push_back(0.5 * (p.m[r - 1] + 1.0));
  out.m.push_back(1.0);
  out.s.resize(p.sites(), r + 1);
  out.s.leftCols(r) = p.s;
  out.s.col(r) = p.s.col(r - 1);
  return out;
}

std::vector<FullSolution> minimize_ladder(const SphericalModelSpec& spec, int max_levels, Target target,
                                          const OptimizeOptions& opt) {
  std::vector<FullSolution> out;
  std::optional<ProfileSolution> warm;
  for (int r = 1; r <= max_levels; ++r) {
    out.push_back(minimize_full(spec, r, target, Parameterization::Talagrand, opt, warm));
    ProfileSolution next;
    next.form = Parameterization::Talagrand;
    next.talagrand = embed_next_level(out.back().best.talagrand);
    next.steps = to_steps(next.talagrand);
    warm = next;
  }
  return out;
}


namespace {

double inner_eval(const EuclideanModelSpec& spec, const Vector& q, const SupOptions& opt,
                  const OptimizeOptions& inner_opt, const std::optional<ProfileSolution>& warm, FullSolution* inner,
                  double* tail) {
  const EuclideanModelSpec unit = reparameterize_beta(spec);
  double t = 0.0;
  const SphericalModelSpec sph = mapped_spherical_model(unit, q, opt.truncation_tol, &t);
  FullSolution fs = minimize_full(sph, opt.levels, Target::B, Parameterization::Talagrand, inner_opt, warm);
  const double nn = static_cast<double>(q.size());
  const double radial = (-unit.lattice.mu * q.array() + q.array().log()).sum() / (2.0 * nn);
  const double value = unit.h * unit.h / (2.0 * unit.lattice.mu) + radial + fs.best.cert.value;
  if (inner) *inner = std::move(fs);
  if (tail) *tail = t;
  return value;
}

// Golden section on [a, b], then Newton steps from five-point differences.
template <class F>
std::pair<double, double> refine_max(F&& f, double a, double b, double v0, double f0) {
  double v = v0, fv = f0;
  if (b - a > 1e-6) {
    auto [g, fg] = golden_max(f, a, b, 1e-6);
    if (fg > fv) v = g, fv = fg;
  }
  const double h = 1e-3;
  for (int k = 0; k < 3; ++k) {
    if (v - 2 * h < a || v + 2 * h > b) break;
    const double fm2 = f(v - 2 * h), fm1 = f(v - h), fp1 = f(v + h), fp2 = f(v + 2 * h);
    const double d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h);
    const double d2 = (-fp2 + 16 * fp1 - 30 * fv + 16 * fm1 - fm2) / (12 * h * h);
    if (!(d2 < 0.0)) break;
    const double vn = std::clamp(v - d1 / d2, a, b);
    if (std::abs(vn - v) < 1e-13) break;
    const double fn = f(vn);
    if (!(fn >= fv - 1e-15 * std::max(1.0, std::abs(fv)))) break;
    const double moved = std::abs(vn - v);
    v = vn;
    fv = fn;
    if (moved < 1e-10) break;
  }
  return {v, fv};
}

}  // namespace

double inner_value(const EuclideanModelSpec& spec, const Vector& q, const SupOptions& opt, FullSolution* inner,
                   double* tail) {
  validate(spec);
  return inner_eval(spec, q, opt, opt.inner, std::nullopt, inner, tail);
}

SupSolution sup_over_q(const EuclideanModelSpec& spec, const SupOptions& opt) {
  validate(spec);
  const Eigen::Index n = static_cast<Eigen::Index>(spec.lattice.site_count());
  Vector lo, hi;
  if (opt.region) {
    lo = opt.region->first;
    hi = opt.region->second;
  } else {
    if (!(opt.box_m > 0.0 && opt.box_m < 1.0)) throw Error(ErrorKind::InvalidInput, "box parameter must lie in (0, 1)");
    lo = Vector::Constant(n, opt.box_m);
    hi = Vector::Constant(n, 1.0 / opt.box_m);
  }
  if (lo.size() != n || hi.size() != n || (lo.array() <= 0.0).any() || (hi.array() <= lo.array()).any())
    throw Error(ErrorKind::InvalidInput, "region must satisfy 0 < lo < hi with one entry per site");
  const Vector loglo = lo.array().log(), loghi = hi.array().log();

  SupSolution out;
  out.value = -kInf;
  std::optional<ProfileSolution> warm;
  OptimizeOptions single = opt.inner;
  single.multistart = 1;

  auto eval = [&](const Vector& logq, bool multistart) {
    const Vector q = logq.array().exp();
    FullSolution fs;
    double tail = 0.0;
    const double v = inner_eval(spec, q, opt, multistart ? opt.inner : single, warm, &fs, &tail);
    out.table.push_back({q, v});
    if (v > out.value) {
      out.value = v;
      out.q = q;
      out.inner = fs;
      out.truncation_tail = tail;
      warm = fs.best;
    }
    return v;
  };

  // Coarse grid along the diagonal of the log box.
  const int grid = std::max(1, opt.grid);
  auto diag = [&](double tau) { return Vector(loglo + tau * (loghi - loglo)); };
  double best_tau = 0.5, best_val = -kInf;
  for (int i = 0; i < grid; ++i) {
    const double tau = grid == 1 ? 0.5 : static_cast<double>(i) / (grid - 1);
    const double v = eval(diag(tau), true);
    if (v > best_val) best_val = v, best_tau = tau;
  }
  const double cell = grid == 1 ? 0.5 : 1.0 / (grid - 1);
  {
    auto f = [&](double tau) { return eval(diag(tau), false); };
    const double a = std::max(0.0, best_tau - cell), b = std::min(1.0, best_tau + cell);
    std::tie(best_tau, best_val) = refine_max(f, a, b, best_tau, best_val);
  }

  // Coordinate ascent in log q.
  if (n > 1) {
    Vector logq = out.q.array().log();
    double step = cell * (loghi - loglo).maxCoeff();
    for (int pass = 0; pass < opt.refine_passes; ++pass, step *= 0.5) {
      const double before = out.value;
      for (Eigen::Index x = 0; x < n; ++x) {
        logq = out.q.array().log();
        auto f = [&](double v) {
          Vector l = logq;
          l(x) = v;
          return eval(l, false);
        };
        const double a = std::max(loglo(x), logq(x) - step), b = std::min(loghi(x), logq(x) + step);
        refine_max(f, a, b, logq(x), out.value);
      }
      if (out.value - before < 1e-12) break;
    }
  }
  out.cert = out.inner.best.cert;
  out.cert.value = out.value;
  return out;
}

Vector boundary_gap(const SphericalModelSpec& spec, const ContinuumProfile& c, int quad) {
  require_valid(c);
  const Eigen::Index n = c.sites();
  if (spec.sites() != n) throw Error(ErrorKind::InvalidInput, "profile and model have different site counts");
  double q_top = 0.0;
  for (const auto& [loc, mass] : c.atoms)
    if (mass > 0.0) q_top = std::max(q_top, loc);
  const quad::Rule& rule = quad::gauss_legendre(quad);
  const std::vector<double> pts = c.breakpoints();
  Vector integral = Vector::Zero(n);
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    const double a = pts[j], b = std::min(pts[j + 1], q_top);
    if (!(b > a)) continue;
    const Vector slope = c.phi_slope(0.5 * (a + b));
    if (slope.isZero(0.0)) continue;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const DualPoint pt = solve_K(spec.D, delta_of(c, mid + half * rule.nodes[i]));
      integral += half * rule.weights[i] * (grad_K(spec.D, pt) * slope);
    }
  }
  const Vector phi = c.phi_at(q_top);
  const DualPoint bottom = solve_K(spec.D, delta_of(c, 0.0));
  const Vector Rh = bottom.resolvent * spec.h;
  // Field term: derivative of h^T (D + K(u))^{-1} h in u at u = delta(0).
  const Vector field = -(grad_K(spec.D, bottom).transpose() * Rh.cwiseProduct(Rh));
  Vector out(n);
  for (Eigen::Index x = 0; x < n; ++x) out(x) = integral(x) + spec.xi[x].d1(phi(x)) + field(x);
  return out;
}

}  // namespace elman
