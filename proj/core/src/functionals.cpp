#include "elman/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "elman/error.hpp"
#include "elman/quadrature.hpp"

namespace elman {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double sum_terms(const EvaluationReport& rep) {
  double v = 0.0;
  for (const auto& [name, term] : rep.terms) v += term;
  return v;
}

struct Factor {
  double logdet = 0.0;
  Matrix inv;
};

Factor factor_or_throw(const Matrix& M, const char* what) {
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all())
    throw Error(ErrorKind::DomainViolation, std::string(what) + " is not positive definite");
  Factor f;
  f.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  f.inv = llt.solve(Matrix::Identity(M.rows(), M.cols()));
  return f;
}

void check_sites(const SphericalModelSpec& spec, Eigen::Index n) {
  if (spec.sites() != n) throw Error(ErrorKind::InvalidInput, "profile and model have different site counts");
}

// ---- B over Talagrand profiles ---------------------------------------------------------

struct BCore {
  EvaluationReport report;
  BGradient grad;
};

BCore b_core(const SphericalModelSpec& spec, const TalagrandProfile& p, bool want_grad) {
  require_valid(p);
  const Eigen::Index n = p.sites();
  check_sites(spec, n);
  for (Eigen::Index x = 0; x < n; ++x)
    if (p.at(x, p.levels()) > 1.0 - kDomainEta)
      throw Error(ErrorKind::DomainViolation, "B requires s^r(x) <= 1 - eta");
  const int r = p.levels();
  const double nn = static_cast<double>(n);
  const LevelSequence delta = delta_sequence(p);

  std::vector<DualPoint> pts;
  std::vector<double> lam(r + 1, 0.0);
  double duality = 0.0;
  for (int l = 1; l <= r; ++l) {
    pts.push_back(solve_K(spec.D, delta.level(l)));
    lam[l] = lambda(spec.D, pts.back());
    duality = std::max(duality, pts.back().residual);
  }
  auto c = [&](int l) { return 1.0 / p.m[l] - (l == 1 ? 0.0 : 1.0 / p.m[l - 1]); };

  double lam_term = 0.0;
  for (int l = 1; l <= r; ++l) lam_term += c(l) * lam[l];
  const DualPoint& first = pts.front();
  const Vector s1 = p.s.col(0);
  const double ks = first.K.dot(s1);
  double xi_term = 0.0;
  for (Eigen::Index x = 0; x < n; ++x)
    for (int k = 1; k <= r; ++k) xi_term += p.m[k] * (spec.xi[x](p.at(x, k + 1)) - spec.xi[x](p.at(x, k)));
  const Vector Gh = first.resolvent * spec.h;
  const double field = spec.h.dot(Gh);

  BCore out;
  EvaluationReport& rep = out.report;
  rep.terms["log2pi"] = 0.5 * kLog2Pi;
  rep.terms["lambda"] = 0.5 * lam_term;
  rep.terms["k_s1"] = ks / (2.0 * nn);
  rep.terms["xi"] = xi_term / (2.0 * nn);
  rep.terms["field"] = field / (2.0 * nn);
  rep.value = sum_terms(rep);
  rep.residuals["duality"] = duality;
  out.grad.value = rep.value;
  if (!want_grad) return out;

  // e^l_x = d(2nB)/d delta^l_x.
  const Matrix J1 = grad_K(spec.D, first);
  Matrix e(n, r + 1);
  e.col(0).setZero();
  for (int l = 1; l <= r; ++l) e.col(l) = c(l) * pts[l - 1].K;
  e.col(1) += J1 * s1 - J1 * Gh.cwiseProduct(Gh);

  Matrix prefix = Matrix::Zero(n, r + 1);  // prefix.col(k) = sum_{l=1}^{k} e^l
  for (int l = 1; l <= r; ++l) prefix.col(l) = prefix.col(l - 1) + e.col(l);

  Matrix ds(n, r);
  for (int k = 1; k <= r; ++k) {
    Vector g = p.m[k - 1] * prefix.col(k - 1) - p.m[k] * prefix.col(k);
    if (k == 1) g += first.K;
    for (Eigen::Index x = 0; x < n; ++x) g(x) += (p.m[k - 1] - p.m[k]) * spec.xi[x].d1(p.at(x, k));
    ds.col(k - 1) = g / (2.0 * nn);
  }
  Vector dm = Vector::Zero(r + 1);
  for (int k = 1; k < r; ++k) {
    double g = nn * (lam[k + 1] - lam[k]) / (p.m[k] * p.m[k]);
    for (Eigen::Index x = 0; x < n; ++x) {
      g += prefix(x, k) * (p.at(x, k + 1) - p.at(x, k));
      g += spec.xi[x](p.at(x, k + 1)) - spec.xi[x](p.at(x, k));
    }
    dm(k) = g / (2.0 * nn);
  }
  out.grad.ds = std::move(ds);
  out.grad.dm = std::move(dm);
  return out;
}

// ---- A over step profiles --------------------------------------------------------------

struct ACore {
  EvaluationReport report;
  AGradient grad;
};

ACore a_core(const SphericalModelSpec& spec, const StepProfile& sp, const Vector& b, bool want_grad) {
  const Eigen::Index n = sp.P.rows();
  check_sites(spec, n);
  if (b.size() != n) throw Error(ErrorKind::InvalidInput, "b must have one entry per site");
  const int J = sp.segments();
  const double nn = static_cast<double>(n);
  const Matrix d = step_d(sp, spec.xi);

  std::vector<Factor> f;
  f.reserve(J + 1);
  for (int j = 0; j <= J; ++j) {
    Matrix M = spec.D;
    M.diagonal() += b - d.col(j);
    f.push_back(factor_or_throw(M, "D + b - d"));
  }

  Matrix dxi(n, J);  // xi'(p^{k+1}) - xi'(p^k)
  Matrix dtheta(n, J);
  for (Eigen::Index x = 0; x < n; ++x)
    for (int k = 0; k < J; ++k) {
      dxi(x, k) = spec.xi[x].d1(sp.P(x, k + 1)) - spec.xi[x].d1(sp.P(x, k));
      dtheta(x, k) = spec.xi[x].theta(sp.P(x, k + 1)) - spec.xi[x].theta(sp.P(x, k));
    }

  // Increment form: d^k - d^{k+1} = w_k dxi_k, so log det ratios are sums of log1p over the
  // spectrum mu of diag(sqrt dxi_k) R_k diag(sqrt dxi_k). This stays accurate as w_k -> 0.
  std::vector<Vector> mu(J);
  for (int k = 0; k < J; ++k) {
    const Vector root = dxi.col(k).cwiseMax(0.0).cwiseSqrt();
    const Matrix S = root.asDiagonal() * f[k].inv * root.asDiagonal();
    mu[k] = Eigen::SelfAdjointEigenSolver<Matrix>(S, Eigen::EigenvaluesOnly).eigenvalues().cwiseMax(0.0);
  }
  // (log det M_{k+1} - log det M_k) / w_k, with the w_k = 0 limit tr(R_k dxi_k).
  auto log_ratio = [&](int k) {
    const double w = sp.w[k];
    double acc = 0.0;
    for (Eigen::Index i = 0; i < mu[k].size(); ++i) acc += w > 0.0 ? std::log1p(w * mu[k](i)) / w : mu[k](i);
    return acc;
  };

  double logdet = -f[J].logdet;
  for (int k = 0; k < J; ++k) logdet += log_ratio(k);
  double theta = 0.0;
  for (int k = 0; k < J; ++k) theta += sp.w[k] * dtheta.col(k).sum();
  Matrix C = spec.h * spec.h.transpose();
  for (Eigen::Index x = 0; x < n; ++x) C(x, x) += spec.xi[x].d1(0.0);
  const double field = f[0].inv.cwiseProduct(C).sum();

  ACore out;
  EvaluationReport& rep = out.report;
  rep.terms["log2pi"] = 0.5 * kLog2Pi;
  rep.terms["logdet"] = logdet / (2.0 * nn);
  rep.terms["b"] = b.sum() / (2.0 * nn);
  rep.terms["theta"] = -theta / (2.0 * nn);
  rep.terms["field"] = field / (2.0 * nn);
  rep.value = sum_terms(rep);
  out.grad.value = rep.value;
  if (!want_grad) return out;

  const Matrix RCR = f[0].inv * C * f[0].inv;
  // E_k = (diag R_k - diag R_{k+1}) / w_k = (R_{k+1} o R_k) dxi_k, with the w_k = 0 limit (R_k o R_k) dxi_k.
  Matrix E(n, J);
  for (int k = 0; k < J; ++k) {
    const Matrix& Rn = sp.w[k] > 0.0 ? f[k + 1].inv : f[k].inv;
    E.col(k) = Rn.cwiseProduct(f[k].inv) * dxi.col(k);
  }

  Vector db = Vector::Ones(n) - f[J].inv.diagonal() - RCR.diagonal() - E.rowwise().sum();

  // prefix.col(k) = d(2nA)/d d^0 + ... + d(2nA)/d d^k; only w_k * prefix.col(k) enters below.
  Matrix wprefix = Matrix::Zero(n, J + 1);
  Vector running = RCR.diagonal();
  for (int k = 0; k < J; ++k) {
    wprefix.col(k) = f[k].inv.diagonal() + sp.w[k] * running;
    running += E.col(k);
  }

  Matrix dP = Matrix::Zero(n, J + 1);
  for (int m = 1; m < J; ++m) {
    for (Eigen::Index x = 0; x < n; ++x) {
      const double xpp = spec.xi[x].d2(sp.P(x, m));
      // d d^j / d p^m = xi''(p^m) ([j <= m-1] w_{m-1} - [j <= m] w_m).
      double v = xpp * (wprefix(x, m - 1) - wprefix(x, m));
      v -= (sp.w[m - 1] - sp.w[m]) * sp.P(x, m) * xpp;
      dP(x, m) = v / (2.0 * nn);
    }
  }
  Vector dw = Vector::Zero(J);
  Vector before = RCR.diagonal();  // sum of E_j over j < k, plus the field part
  for (int k = 0; k < J; ++k) {
    if (sp.w[k] > 0.0) {
      // d/dw [log det ratio / w] at fixed d, plus the shift of d^0..d^k; the 1/w parts combine into
      // sum mu^2 psi(w mu) with psi(x) = (x - log1p(x)) / x^2.
      double v = 0.0;
      for (Eigen::Index i = 0; i < mu[k].size(); ++i) {
        const double x = sp.w[k] * mu[k](i);
        const double psi = std::abs(x) < 1e-3 ? 0.5 - x / 3.0 + x * x / 4.0 - x * x * x / 5.0
                                              : (x - std::log1p(x)) / (x * x);
        v += mu[k](i) * mu[k](i) * psi;
      }
      v += before.dot(dxi.col(k)) - dtheta.col(k).sum();
      dw(k) = v / (2.0 * nn);
    }
    before += E.col(k);
  }
  out.grad.db = db / (2.0 * nn);
  out.grad.dP = std::move(dP);
  out.grad.dw = std::move(dw);
  return out;
}

}  // namespace

void validate(const SphericalModelSpec& spec) {
  const CouplingMatrix checked = make_coupling(spec.D);
  (void)checked;
  if (static_cast<Eigen::Index>(spec.xi.size()) != spec.sites())
    throw Error(ErrorKind::InvalidInput, "xi: one mixing function per site required");
  for (const auto& xi : spec.xi) validate(xi);
  if (spec.h.size() != spec.sites()) throw Error(ErrorKind::InvalidInput, "h: one field value per site required");
  if (!spec.h.allFinite()) throw Error(ErrorKind::InvalidInput, "h: entries must be finite");
}

void validate(const EuclideanModelSpec& spec) {
  validate_lattice(spec.lattice);
  validate(spec.B);
  if (!(spec.beta > 0.0)) throw Error(ErrorKind::InvalidInput, "beta must be positive");
  if (!std::isfinite(spec.h)) throw Error(ErrorKind::InvalidInput, "h must be finite");
}

EvaluationReport eval_B_discrete(const SphericalModelSpec& spec, const TalagrandProfile& p) {
  return b_core(spec, p, false).report;
}

BGradient b_value_gradient(const SphericalModelSpec& spec, const TalagrandProfile& p) {
  return b_core(spec, p, true).grad;
}

EvaluationReport eval_A_steps(const SphericalModelSpec& spec, const StepProfile& sp, const Vector& b) {
  return a_core(spec, sp, b, false).report;
}

AGradient a_value_gradient(const SphericalModelSpec& spec, const StepProfile& sp, const Vector& b) {
  return a_core(spec, sp, b, true).grad;
}

EvaluationReport eval_A_discrete(const SphericalModelSpec& spec, const TalagrandProfile& p, const Vector& b) {
  const auto v = validate(p);
  for (const auto& msg : v)
    if (msg.find("domain violation") == std::string::npos) throw Error(ErrorKind::InvalidInput, msg);
  EvaluationReport rep = eval_A_steps(spec, to_steps(p), b);
  if (!v.empty()) rep.domain_flags.push_back("Y0-extension");
  return rep;
}

EvaluationReport eval_A_discrete(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Vector& b) {
  require_valid(p);
  EvaluationReport rep = eval_A_steps(spec, to_steps(p), b);
  rep.domain_flags.push_back("Y0-extension");
  return rep;
}

bool a_domain_ok(const SphericalModelSpec& spec, const StepProfile& sp, const Vector& b) {
  const Matrix d = step_d(sp, spec.xi);
  Matrix M = spec.D;
  M.diagonal() += b - d.col(0);
  return is_positive_definite(M);
}

namespace {

double b_continuum_value(const SphericalModelSpec& spec, const ContinuumProfile& c, int quad, double q_star,
                         EvaluationReport* rep) {
  const Eigen::Index n = c.sites();
  const double nn = static_cast<double>(n);
  const std::vector<double> pts = c.breakpoints();
  double duality = 0.0;

  const DualPoint top = solve_K(spec.D, delta_of(c, q_star));
  const double lam = lambda(spec.D, top);
  duality = std::max(duality, top.residual);

  double k_integral = 0.0;
  double xi_integral = 0.0;
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    const double a = pts[j], b = pts[j + 1];
    const double mid = 0.5 * (a + b);
    const Vector slope = c.phi_slope(mid);
    if (slope.isZero(0.0)) continue;
    const double F = c.mass_below(mid);
    if (a < q_star) {
      const double hi = std::min(b, q_star);
      k_integral += quad::integrate(
          [&](double s) {
            const DualPoint pt = solve_K(spec.D, delta_of(c, s));
            duality = std::max(duality, pt.residual);
            return pt.K.dot(slope);
          },
          a, hi, quad);
    }
    if (F > 0.0)
      xi_integral += F * quad::integrate(
                             [&](double s) {
                               const Vector phi = c.phi_at(s);
                               double acc = 0.0;
                               for (Eigen::Index x = 0; x < n; ++x) acc += spec.xi[x].d1(phi(x)) * slope(x);
                               return acc;
                             },
                             a, b, quad);
  }
  const DualPoint bottom = solve_K(spec.D, delta_of(c, 0.0));
  const double field = spec.h.dot(bottom.resolvent * spec.h);
  if (rep) {
    rep->terms["log2pi"] = 0.5 * kLog2Pi;
    rep->terms["lambda"] = 0.5 * lam;
    rep->terms["k_integral"] = k_integral / (2.0 * nn);
    rep->terms["xi_integral"] = xi_integral / (2.0 * nn);
    rep->terms["field"] = field / (2.0 * nn);
    rep->residuals["duality"] = duality;
  }
  return 0.5 * (kLog2Pi + lam + (k_integral + xi_integral + field) / nn);
}

}  // namespace

EvaluationReport eval_B_continuum(const SphericalModelSpec& spec, const ContinuumProfile& c, int quad,
                                  std::optional<double> q_star) {
  check_sites(spec, c.sites());
  ContinuumProfile prof = c;
  if (q_star) prof.q_star = *q_star;
  prof.extended = false;
  require_valid(prof);
  if ((c.caps.array() != 1.0).any()) throw Error(ErrorKind::InvalidInput, "B needs a unit-cap profile");
  EvaluationReport rep;
  b_continuum_value(spec, prof, quad, prof.q_star, &rep);
  rep.value = sum_terms(rep);
  rep.residuals["quadrature"] = std::abs(rep.value - b_continuum_value(spec, prof, 2 * quad, prof.q_star, nullptr));
  return rep;
}

namespace {

double a_continuum_value(const SphericalModelSpec& spec, const ContinuumProfile& c, const Vector& b, int quad,
                         EvaluationReport* rep, Vector* db = nullptr) {
  const Eigen::Index n = c.sites();
  const double nn = static_cast<double>(n);
  const std::vector<double> pts = c.breakpoints();
  auto resolvent = [&](double s) {
    Matrix M = spec.D;
    M.diagonal() += b - d_of(c, spec.xi, s, quad);
    return factor_or_throw(M, "D + b - d(s)").inv;
  };

  double trace_integral = 0.0;
  double theta_integral = 0.0;
  Vector trace_grad = Vector::Zero(n);
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    const double a = pts[j], bb = pts[j + 1];
    const double mid = 0.5 * (a + bb);
    const Vector slope = c.phi_slope(mid);
    if (slope.isZero(0.0)) continue;
    const double F = c.mass_below(mid);
    const quad::Rule& rule = quad::gauss_legendre(quad);
    const double half = 0.5 * (bb - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double s = mid + half * rule.nodes[i];
      const Matrix R = resolvent(s);
      const Vector phi = c.phi_at(s);
      Vector weight(n);
      for (Eigen::Index x = 0; x < n; ++x) weight(x) = spec.xi[x].d2(phi(x)) * slope(x);
      trace_integral += half * rule.weights[i] * R.diagonal().dot(weight);
      // d R_xx / d b_y = -R_xy^2
      if (db) trace_grad -= half * rule.weights[i] * (R.cwiseProduct(R) * weight);
    }
    if (F > 0.0)
      theta_integral += F * quad::integrate(
                                [&](double s) {
                                  const Vector phi = c.phi_at(s);
                                  double acc = 0.0;
                                  for (Eigen::Index x = 0; x < n; ++x) acc += phi(x) * spec.xi[x].d2(phi(x)) * slope(x);
                                  return acc;
                                },
                                a, bb, quad);
  }
  Matrix Db = spec.D;
  Db.diagonal() += b;
  const Factor fb = factor_or_throw(Db, "D + b");
  const double ld = fb.logdet;
  const Matrix R0 = resolvent(0.0);
  Matrix C = spec.h * spec.h.transpose();
  for (Eigen::Index x = 0; x < n; ++x) C(x, x) += spec.xi[x].d1(0.0);
  const double field = R0.cwiseProduct(C).sum();
  if (db) {
    const Matrix RCR = R0 * C * R0;
    *db = (trace_grad - fb.inv.diagonal() + Vector::Ones(n) - RCR.diagonal()) / (2.0 * nn);
  }
  if (rep) {
    rep->terms["log2pi"] = 0.5 * kLog2Pi;
    rep->terms["trace_integral"] = trace_integral / (2.0 * nn);
    rep->terms["logdet"] = -ld / (2.0 * nn);
    rep->terms["b"] = b.sum() / (2.0 * nn);
    rep->terms["theta"] = -theta_integral / (2.0 * nn);
    rep->terms["field"] = field / (2.0 * nn);
  }
  return 0.5 * kLog2Pi + (trace_integral - ld + b.sum() - theta_integral + field) / (2.0 * nn);
}

}  // namespace

EvaluationReport eval_A_continuum(const SphericalModelSpec& spec, const ContinuumProfile& c, const Vector& b, int quad) {
  check_sites(spec, c.sites());
  if (b.size() != c.sites()) throw Error(ErrorKind::InvalidInput, "b must have one entry per site");
  ContinuumProfile prof = c;
  prof.extended = true;
  require_valid(prof);
  EvaluationReport rep;
  a_continuum_value(spec, prof, b, quad, &rep);
  rep.value = sum_terms(rep);
  rep.residuals["quadrature"] = std::abs(rep.value - a_continuum_value(spec, prof, b, 2 * quad, nullptr));
  return rep;
}

double a_continuum_value_gradient(const SphericalModelSpec& spec, const ContinuumProfile& c, const Vector& b,
                                  Vector& db, int quad) {
  check_sites(spec, c.sites());
  if (b.size() != c.sites()) throw Error(ErrorKind::InvalidInput, "b must have one entry per site");
  ContinuumProfile prof = c;
  prof.extended = true;
  require_valid(prof);
  return a_continuum_value(spec, prof, b, quad, nullptr, &db);
}

EuclideanModelSpec reparameterize_beta(const EuclideanModelSpec& spec) {
  validate(spec);
  EuclideanModelSpec out = spec;
  out.h = spec.beta * spec.h;
  out.lattice.mu = spec.beta * spec.lattice.mu;
  out.lattice.t = spec.beta * spec.lattice.t;
  out.B = scaled(spec.B, spec.beta * spec.beta);
  out.beta = 1.0;
  return out;
}

SphericalModelSpec mapped_spherical_model(const EuclideanModelSpec& spec, const Vector& q, double truncation_tol,
                                          double* tail) {
  const Matrix lap = build_periodic_laplacian(spec.lattice);
  if (q.size() != lap.rows() || (q.array() <= 0.0).any())
    throw Error(ErrorKind::InvalidInput, "q must be positive with one entry per lattice site");
  const Vector root = q.cwiseSqrt();
  SphericalModelSpec out;
  out.D = -spec.lattice.t * (root.asDiagonal() * lap * root.asDiagonal());
  out.D = 0.5 * (out.D + out.D.transpose());
  out.h = Vector::Zero(q.size());
  double worst = 0.0;
  for (Eigen::Index x = 0; x < q.size(); ++x) {
    const Restriction res = spherical_restriction_adaptive(spec.B, q(x), truncation_tol);
    worst = std::max(worst, std::max(res.tail_bound, res.derivative_tail_bound));
    out.xi.push_back(res.xi);
  }
  if (tail) *tail = worst;
  return out;
}

namespace {

EvaluationReport p_direct(const EuclideanModelSpec& spec, const ContinuumProfile& c, int quad, double q_star) {
  const double beta = spec.beta, mu = spec.lattice.mu;
  const Matrix D = -spec.lattice.t * build_periodic_laplacian(spec.lattice);
  const Eigen::Index n = c.sites();
  const double nn = static_cast<double>(n);
  const std::vector<double> pts = c.breakpoints();
  double duality = 0.0;

  const DualPoint top = solve_K(D, beta * delta_of(c, q_star));
  const double lam = lambda(D, top);
  duality = top.residual;

  double k_integral = 0.0, b_integral = 0.0;
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    const double a = pts[j], b = pts[j + 1];
    const double mid = 0.5 * (a + b);
    const Vector slope = c.phi_slope(mid);
    if (slope.isZero(0.0)) continue;
    const double F = c.mass_below(mid);
    if (a < q_star)
      k_integral += quad::integrate(
          [&](double s) {
            const DualPoint pt = solve_K(D, beta * delta_of(c, s));
            duality = std::max(duality, pt.residual);
            return beta * pt.K.dot(slope);
          },
          a, std::min(b, q_star), quad);
    if (F > 0.0)
      b_integral += F * quad::integrate(
                            [&](double u) {
                              const Vector phi = c.phi_at(u);
                              double acc = 0.0;
                              for (Eigen::Index x = 0; x < n; ++x)
                                acc += spec.B.eval(2.0 * (c.caps(x) - phi(x)), 1) * slope(x);
                              return acc;
                            },
                            a, b, quad);
  }
  EvaluationReport rep;
  rep.terms["log2pi_beta"] = 0.5 * std::log(2.0 * std::numbers::pi / beta);
  rep.terms["field"] = 0.5 * beta * spec.h * spec.h / mu;
  rep.terms["lambda"] = 0.5 * lam;
  rep.terms["mass"] = -0.5 * beta * mu * c.caps.sum() / nn;
  rep.terms["k_integral"] = 0.5 * k_integral / nn;
  rep.terms["b_integral"] = -beta * beta * b_integral / nn;
  rep.value = sum_terms(rep);
  rep.residuals["duality"] = duality;
  return rep;
}

EvaluationReport p_mapped(const EuclideanModelSpec& spec, const ContinuumProfile& c, int quad, double q_star,
                          double tol) {
  const EuclideanModelSpec unit = reparameterize_beta(spec);
  double tail = 0.0;
  const SphericalModelSpec sph = mapped_spherical_model(unit, c.caps, tol, &tail);
  ContinuumProfile base = normalize_caps(c);
  const EvaluationReport inner = eval_B_continuum(sph, base, quad, q_star / c.q_total());
  const double nn = static_cast<double>(c.sites());
  EvaluationReport rep;
  rep.terms["field"] = unit.h * unit.h / (2.0 * unit.lattice.mu);
  rep.terms["radial"] = ((-unit.lattice.mu * c.caps.array() + c.caps.array().log()).sum()) / (2.0 * nn);
  rep.terms["B_q"] = inner.value;
  rep.value = sum_terms(rep);
  rep.residuals = inner.residuals;
  rep.residuals["truncation"] = tail;
  return rep;
}

}  // namespace

EvaluationReport eval_P(const EuclideanModelSpec& spec, const Vector& q, const ContinuumProfile& c, Route route, int quad,
                        std::optional<double> q_star, double truncation_tol) {
  validate(spec);
  if (q.size() != c.sites() || (q - c.caps).cwiseAbs().maxCoeff() > 1e-12 * q.cwiseAbs().maxCoeff())
    throw Error(ErrorKind::InvalidInput, "profile caps must equal q");
  if (static_cast<std::size_t>(q.size()) != spec.lattice.site_count())
    throw Error(ErrorKind::InvalidInput, "q must have one entry per lattice site");
  ContinuumProfile prof = c;
  if (q_star) prof.q_star = *q_star;
  prof.extended = false;
  require_valid(prof);
  return route == Route::Direct ? p_direct(spec, prof, quad, prof.q_star)
                                : p_mapped(spec, prof, quad, prof.q_star, truncation_tol);
}

double y_b_closed_form(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Vector& b, const Vector& v) {
  require_valid(p);
  const Eigen::Index n = p.sites();
  check_sites(spec, n);
  if (b.size() != n || v.size() != n) throw Error(ErrorKind::InvalidInput, "b and v need one entry per site");
  const StepProfile sp = to_steps(p);
  const Matrix d = step_d(sp, spec.xi);
  const int r = p.levels();
  std::vector<Factor> f;
  for (int k = 0; k <= r; ++k) {
    Matrix M = spec.D;
    M.diagonal() += b - d.col(k);
    f.push_back(factor_or_throw(M, "D + b - d"));
  }
  double acc = static_cast<double>(n) * kLog2Pi - f[r].logdet;
  for (int k = 0; k < r; ++k) acc += (f[k + 1].logdet - f[k].logdet) / p.t[k];
  Matrix C = v * v.transpose();
  for (Eigen::Index x = 0; x < n; ++x) C(x, x) += spec.xi[x].d1(0.0);
  acc += f[0].inv.cwiseProduct(C).sum();
  return acc / (2.0 * static_cast<double>(n));
}

double w_of_b(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Vector& b) {
  return y_b_closed_form(spec, p, b, spec.h) + 0.5 * b.mean();
}

double gamma2_closed_form(const SphericalModelSpec& spec, const PanchenkoProfile& p) {
  require_valid(p);
  check_sites(spec, p.sites());
  double acc = 0.0;
  for (Eigen::Index x = 0; x < p.sites(); ++x)
    for (int k = 0; k < p.levels(); ++k) acc += p.t[k] * (spec.xi[x].theta(p.at(x, k + 1)) - spec.xi[x].theta(p.at(x, k)));
  return acc / (2.0 * static_cast<double>(p.sites()));
}

}  // namespace elman
