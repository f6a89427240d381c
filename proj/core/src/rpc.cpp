#include "elman/rpc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "elman/error.hpp"
#include "elman/quadrature.hpp"
#include "elman/random.hpp"
#include "parallel.hpp"

namespace elman {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr int kMaxLevelDims = 32;

/// Streaming log-sum-exp.
struct LogSum {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  void push(double a) {
    if (a <= max) {
      sum += std::exp(a - max);
    } else {
      sum = sum * std::exp(max - a) + 1.0;
      max = a;
    }
  }
  void merge(const LogSum& o) {
    if (o.sum == 0.0) return;
    if (o.max <= max) {
      sum += o.sum * std::exp(o.max - max);
    } else {
      sum = sum * std::exp(max - o.max) + o.sum;
      max = o.max;
    }
  }
  double value() const { return max + std::log(sum); }
};

struct Level {
  std::vector<Eigen::Index> dims;
  std::vector<double> sd;
};

void validate_spec(const RecursionSpec& s) {
  const int r = s.levels();
  if (r < 1) throw Error(ErrorKind::InvalidInput, "recursion needs at least one level");
  if (s.variance.cols() != r + 1) throw Error(ErrorKind::InvalidInput, "variance needs r + 1 columns");
  if (s.origin.size() != s.dims()) throw Error(ErrorKind::InvalidInput, "origin needs one entry per dimension");
  if (!s.leaf) throw Error(ErrorKind::InvalidInput, "recursion leaf is empty");
  for (int k = 0; k < r; ++k) {
    if (!(s.t[k] > 0.0 && s.t[k] <= 1.0)) throw Error(ErrorKind::InvalidInput, "t must lie in (0, 1]");
    if (k > 0 && !(s.t[k] > s.t[k - 1])) throw Error(ErrorKind::InvalidInput, "t must be strictly increasing");
  }
  if (!s.variance.allFinite() || s.variance.minCoeff() < 0.0)
    throw Error(ErrorKind::InvalidInput, "variances must be finite and nonnegative");
}

std::vector<Level> make_levels(const RecursionSpec& s) {
  std::vector<Level> levels(s.levels() + 1);
  for (int k = 0; k <= s.levels(); ++k)
    for (Eigen::Index d = 0; d < s.dims(); ++d)
      if (s.variance(d, k) > 0.0) {
        levels[k].dims.push_back(d);
        levels[k].sd.push_back(std::sqrt(s.variance(d, k)));
      }
  for (const auto& l : levels)
    if (static_cast<int>(l.dims.size()) > kMaxLevelDims)
      throw Error(ErrorKind::BudgetExceeded, "too many Gaussian coordinates in one level");
  return levels;
}

int top_level(const std::vector<Level>& levels) {
  for (int k = 0; k < static_cast<int>(levels.size()); ++k)
    if (!levels[k].dims.empty()) return k;
  return -1;
}

/// Tensor Gauss-Hermite evaluation of the recursion.
class TensorRecursion {
 public:
  TensorRecursion(const RecursionSpec& s, const std::vector<Level>& levels, int nodes)
      : s_(s), levels_(levels), rule_(quad::gauss_hermite_normal(nodes)), nodes_(nodes) {
    logw_.reserve(rule_.weights.size());
    for (double w : rule_.weights) logw_.push_back(std::log(w));
  }

  double run(int threads) const {
    const int r = s_.levels();
    const int top = top_level(levels_);
    if (top < 0) return s_.leaf(s_.origin);
    const int chunks = nodes_;
    std::vector<LogSum> parts(chunks);
    std::vector<double> sums(chunks, 0.0);
    detail::parallel_for(chunks, threads, [&](int c) {
      std::vector<Vector> ws(r + 2, Vector(s_.dims()));
      if (top == 0) {
        double acc = 0.0;
        for_grid(0, s_.origin, ws[0], c, [&](double lw) { acc += std::exp(lw) * F(0, ws[0], ws); });
        sums[c] = acc;
      } else {
        const double t = s_.t[top - 1];
        LogSum ls;
        for_grid(top, s_.origin, ws[top], c, [&](double lw) { ls.push(lw + t * F(top, ws[top], ws)); });
        parts[c] = ls;
      }
    });
    if (top == 0) {
      double acc = 0.0;
      for (double v : sums) acc += v;
      return acc;
    }
    LogSum all;
    for (const auto& p : parts) all.merge(p);
    return all.value() / s_.t[top - 1];
  }

 private:
  /// F_k(acc), k = 0..r.
  double F(int k, const Vector& acc, std::vector<Vector>& ws) const {
    const int r = s_.levels();
    if (k == r) return s_.leaf(acc);
    if (levels_[k + 1].dims.empty()) return F(k + 1, acc, ws);
    const double t = s_.t[k];
    LogSum ls;
    for_grid(k + 1, acc, ws[k + 1], -1, [&](double lw) { ls.push(lw + t * F(k + 1, ws[k + 1], ws)); });
    return ls.value() / t;
  }

  /// Visits every grid point of level L with buf = acc + z; `first` fixes the first coordinate's node.
  template <class Body>
  void for_grid(int L, const Vector& acc, Vector& buf, int first, Body&& body) const {
    const Level& lv = levels_[L];
    buf = acc;
    const int a = static_cast<int>(lv.dims.size());
    if (a == 0) {
      body(0.0);
      return;
    }
    const int lo0 = first >= 0 ? first : 0;
    const int hi0 = first >= 0 ? first + 1 : nodes_;
    std::array<int, kMaxLevelDims> idx{};
    idx[0] = lo0;
    for (int j = 0; j < a; ++j) buf(lv.dims[j]) = acc(lv.dims[j]) + lv.sd[j] * rule_.nodes[idx[j]];
    for (;;) {
      double lw = 0.0;
      for (int j = 0; j < a; ++j) lw += logw_[idx[j]];
      body(lw);
      int j = a - 1;
      for (; j >= 0; --j) {
        const int hi = j == 0 ? hi0 : nodes_;
        if (++idx[j] < hi) {
          buf(lv.dims[j]) = acc(lv.dims[j]) + lv.sd[j] * rule_.nodes[idx[j]];
          break;
        }
        idx[j] = j == 0 ? lo0 : 0;
        buf(lv.dims[j]) = acc(lv.dims[j]) + lv.sd[j] * rule_.nodes[idx[j]];
      }
      if (j < 0) return;
    }
  }

  const RecursionSpec& s_;
  const std::vector<Level>& levels_;
  const quad::Rule& rule_;
  int nodes_;
  std::vector<double> logw_;
};

/// Nested Monte Carlo with antithetic pairs; pair i of the top level owns substream i.
class SampledRecursion {
 public:
  SampledRecursion(const RecursionSpec& s, const std::vector<Level>& levels, int per_level)
      : s_(s), levels_(levels), pairs_(per_level / 2) {}

  RecursionResult run(std::uint64_t seed, int threads) const {
    RecursionResult res;
    res.method = RecursionMethod::MonteCarlo;
    res.nodes = 2 * pairs_;
    const int r = s_.levels();
    const int top = top_level(levels_);
    if (top < 0) {
      res.value = s_.leaf(s_.origin);
      return res;
    }
    std::vector<std::array<double, 2>> out(pairs_);
    detail::parallel_for(pairs_, threads, [&](int i) {
      auto rng = make_rng(seed, RngTag::RecursionMc, static_cast<std::uint64_t>(i));
      std::vector<Vector> ws(r + 2, Vector(s_.dims()));
      const Level& lv = levels_[top];
      Vector g(lv.dims.size());
      std::normal_distribution<double> normal;
      for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = normal(rng);
      for (int sign = 0; sign < 2; ++sign) {
        Vector& buf = ws[top];
        buf = s_.origin;
        const double sg = sign == 0 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < lv.dims.size(); ++j) buf(lv.dims[j]) += sg * lv.sd[j] * g(j);
        const double f = F(top, buf, ws, rng);
        out[i][sign] = top == 0 ? f : s_.t[top - 1] * f;
      }
    });
    const double P = static_cast<double>(pairs_);
    if (top == 0) {
      double mean = 0.0, sq = 0.0;
      for (const auto& o : out) mean += 0.5 * (o[0] + o[1]);
      mean /= P;
      for (const auto& o : out) sq += std::pow(0.5 * (o[0] + o[1]) - mean, 2);
      res.value = mean;
      res.error = pairs_ > 1 ? std::sqrt(sq / (P - 1.0) / P) : std::numeric_limits<double>::infinity();
      return res;
    }
    const double t = s_.t[top - 1];
    LogSum ls;
    for (const auto& o : out) {
      ls.push(o[0]);
      ls.push(o[1]);
    }
    double mean = 0.0, sq = 0.0;
    std::vector<double> y(pairs_);
    for (int i = 0; i < pairs_; ++i) {
      y[i] = 0.5 * (std::exp(out[i][0] - ls.max) + std::exp(out[i][1] - ls.max));
      mean += y[i];
    }
    mean /= P;
    for (double v : y) sq += (v - mean) * (v - mean);
    res.value = (ls.value() - std::log(2.0 * P)) / t;
    res.error = pairs_ > 1 ? std::sqrt(sq / (P - 1.0) / P) / (mean * t) : std::numeric_limits<double>::infinity();
    return res;
  }

 private:
  double F(int k, const Vector& acc, std::vector<Vector>& ws, std::mt19937_64& rng) const {
    const int r = s_.levels();
    if (k == r) return s_.leaf(acc);
    const Level& lv = levels_[k + 1];
    if (lv.dims.empty()) return F(k + 1, acc, ws, rng);
    const double t = s_.t[k];
    std::normal_distribution<double> normal;
    std::array<double, kMaxLevelDims> g{};
    LogSum ls;
    for (int i = 0; i < pairs_; ++i) {
      for (std::size_t j = 0; j < lv.dims.size(); ++j) g[j] = normal(rng);
      for (int sign = 0; sign < 2; ++sign) {
        Vector& buf = ws[k + 1];
        buf = acc;
        const double sg = sign == 0 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < lv.dims.size(); ++j) buf(lv.dims[j]) += sg * lv.sd[j] * g[j];
        ls.push(t * F(k + 1, buf, ws, rng));
      }
    }
    return (ls.value() - std::log(2.0 * pairs_)) / t;
  }

  const RecursionSpec& s_;
  const std::vector<Level>& levels_;
  int pairs_;
};

int active_dims(const std::vector<Level>& levels) {
  int a = 0;
  for (const auto& l : levels) a += static_cast<int>(l.dims.size());
  return a;
}

int active_levels(const std::vector<Level>& levels) {
  int a = 0;
  for (const auto& l : levels) a += l.dims.empty() ? 0 : 1;
  return a;
}

/// Largest n <= cap with n^dims <= budget.
int fit_nodes(int cap, int dims, double budget) {
  if (dims == 0) return cap;
  int n = 1;
  while (n < cap && std::pow(static_cast<double>(n + 1), dims) <= budget) ++n;
  return n;
}

Eigen::LLT<Matrix> factor_pd(const Matrix& m, ErrorKind kind, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw Error(kind, std::string(what) + " is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void check_profile(const SphericalModelSpec& spec, const PanchenkoProfile& p) {
  validate(spec);
  require_valid(p);
  if (p.sites() != spec.sites()) throw Error(ErrorKind::InvalidInput, "profile and model disagree on |Omega|");
}

/// d^0 of a Panchenko profile.
Vector d_zero(const SphericalModelSpec& spec, const PanchenkoProfile& p) {
  return step_d(to_steps(p), spec.xi).col(0);
}

}  // namespace

RecursionResult evaluate_recursion(const RecursionSpec& spec, const RecursionOptions& opt) {
  validate_spec(spec);
  if (opt.nodes < 2 || opt.min_nodes < 2) throw Error(ErrorKind::InvalidInput, "need at least 2 nodes");
  if (!(spec.leaf_cost > 0.0)) throw Error(ErrorKind::InvalidInput, "leaf_cost must be positive");
  const std::vector<Level> levels = make_levels(spec);
  const int dims = active_dims(levels);
  const int threads = detail::thread_count(opt.threads);
  const double budget = opt.max_work / spec.leaf_cost;

  if (opt.method == RecursionMethod::MonteCarlo) {
    const int a = active_levels(levels);
    const double total = std::min(static_cast<double>(opt.samples), budget);
    int per = a == 0 ? 2 : static_cast<int>(std::floor(std::pow(total, 1.0 / a) + 1e-9));
    per -= per % 2;
    if (per < 2) throw Error(ErrorKind::BudgetExceeded, "Monte Carlo budget below one antithetic pair per level");
    SampledRecursion mc(spec, levels, per);
    RecursionResult res = mc.run(opt.seed, threads);
    res.dimensions = dims;
    res.work = std::pow(static_cast<double>(per), a) * spec.leaf_cost;
    return res;
  }

  const int nodes = fit_nodes(opt.nodes, dims, budget);
  if (nodes < opt.min_nodes)
    throw Error(ErrorKind::BudgetExceeded,
                "tensor grid of " + std::to_string(dims) + " Gaussian dimensions exceeds the work budget");
  const int coarse = std::max(2, (3 * nodes + 3) / 4);
  RecursionResult res;
  res.method = RecursionMethod::GaussHermite;
  res.nodes = nodes;
  res.coarse_nodes = coarse;
  res.dimensions = dims;
  res.value = TensorRecursion(spec, levels, nodes).run(threads);
  const double fine_work = std::pow(static_cast<double>(nodes), dims) * spec.leaf_cost;
  if (dims > 0) {
    const double rough = TensorRecursion(spec, levels, coarse).run(threads);
    res.error = std::abs(res.value - rough);
    res.work = fine_work + std::pow(static_cast<double>(coarse), dims) * spec.leaf_cost;
  } else {
    res.work = fine_work;
  }
  return res;
}

RecursionSpec y_b_recursion(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Vector& b,
                            const Vector& v) {
  check_profile(spec, p);
  const Eigen::Index n = spec.sites();
  if (b.size() != n || v.size() != n) throw Error(ErrorKind::InvalidInput, "b and v need one entry per site");
  Matrix shifted = spec.D;
  shifted.diagonal() += b - d_zero(spec, p);
  factor_pd(shifted, ErrorKind::DomainViolation, "D + b - d^0");
  Matrix Db = spec.D;
  Db.diagonal() += b;
  const auto llt = factor_pd(Db, ErrorKind::DomainViolation, "D + b");
  const Matrix R = llt.solve(Matrix::Identity(n, n));
  const double base = 0.5 * static_cast<double>(n) * kLog2Pi - 0.5 * log_det(llt);

  const int r = p.levels();
  RecursionSpec rs;
  rs.t.assign(p.t.begin(), p.t.begin() + r);
  rs.variance.resize(n, r + 1);
  for (Eigen::Index x = 0; x < n; ++x) {
    rs.variance(x, 0) = spec.xi[x].d1(0.0);
    for (int k = 1; k <= r; ++k) rs.variance(x, k) = spec.xi[x].d1(p.at(x, k)) - spec.xi[x].d1(p.at(x, k - 1));
  }
  rs.origin = v;
  rs.leaf = [R, base](const Vector& u) { return base + 0.5 * u.dot(R * u); };
  return rs;
}

RecursionResult y_b_numeric(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Vector& b,
                            const Vector& v, const RecursionOptions& opt) {
  RecursionResult res = evaluate_recursion(y_b_recursion(spec, p, b, v), opt);
  const double n = static_cast<double>(spec.sites());
  res.value /= n;
  res.error /= n;
  return res;
}

RecursionSpec gamma2_recursion(const SphericalModelSpec& spec, const PanchenkoProfile& p, int M) {
  check_profile(spec, p);
  if (M < 1) throw Error(ErrorKind::InvalidInput, "M must be positive");
  const int r = p.levels();
  RecursionSpec rs;
  rs.t.assign(p.t.begin(), p.t.begin() + r);
  rs.variance = Matrix::Zero(1, r + 1);
  for (Eigen::Index x = 0; x < spec.sites(); ++x)
    for (int k = 1; k <= r; ++k)
      rs.variance(0, k) += spec.xi[x].theta(p.at(x, k)) - spec.xi[x].theta(p.at(x, k - 1));
  rs.variance = rs.variance.cwiseMax(0.0);
  rs.origin = Vector::Zero(1);
  const double scale = std::sqrt(static_cast<double>(M));
  rs.leaf = [scale](const Vector& u) { return scale * u(0); };
  return rs;
}

RecursionResult gamma2_numeric(const SphericalModelSpec& spec, const PanchenkoProfile& p, int M,
                               const RecursionOptions& opt) {
  RecursionResult res = evaluate_recursion(gamma2_recursion(spec, p, M), opt);
  const double nm = static_cast<double>(spec.sites()) * M;
  res.value /= nm;
  res.error /= nm;
  return res;
}

namespace {

/// log sum over {-1, 1}^n of exp(z.u - u'Du/2 + h.u).
double ising_leaf(const Matrix& D, const Vector& h, const Vector& z) {
  const Eigen::Index n = D.rows();
  LogSum ls;
  Vector u(n);
  for (long mask = 0; mask < (1L << n); ++mask) {
    for (Eigen::Index x = 0; x < n; ++x) u(x) = (mask >> x) & 1 ? 1.0 : -1.0;
    ls.push((z + h).dot(u) - 0.5 * u.dot(D * u));
  }
  return ls.value();
}

/// log of the trapezoid rule over (circle of radius sqrt 2)^n with arc-length measure;
/// z is laid out as z(2x + i).
class TorusLeaf {
 public:
  TorusLeaf(const Matrix& D, const Vector& h, int K) : D_(D), h_(h), K_(K), cos_(K), sin_(K) {
    for (int j = 0; j < K; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / K;
      cos_[j] = std::cos(phi);
      sin_[j] = std::sin(phi);
    }
    log_cell_ = static_cast<double>(D.rows()) * std::log(2.0 * std::numbers::pi * std::sqrt(2.0) / K);
  }

  double operator()(const Vector& z) const {
    const Eigen::Index n = D_.rows();
    const double r2 = std::sqrt(2.0);
    std::vector<std::vector<double>> single(n, std::vector<double>(K_));
    for (Eigen::Index x = 0; x < n; ++x)
      for (int j = 0; j < K_; ++j)
        single[x][j] = r2 * (z(2 * x) * cos_[j] + z(2 * x + 1) * sin_[j]) + 2.0 * h_(x) * cos_[j] - D_(x, x);
    std::vector<int> idx(n, 0);
    LogSum ls;
    for (;;) {
      double e = 0.0;
      for (Eigen::Index x = 0; x < n; ++x) {
        e += single[x][idx[x]];
        for (Eigen::Index y = x + 1; y < n; ++y) e -= 2.0 * D_(x, y) * cos_[((idx[x] - idx[y]) % K_ + K_) % K_];
      }
      ls.push(e);
      Eigen::Index x = n - 1;
      for (; x >= 0; --x) {
        if (++idx[x] < K_) break;
        idx[x] = 0;
      }
      if (x < 0) break;
    }
    return ls.value() + log_cell_;
  }

 private:
  Matrix D_;
  Vector h_;
  int K_;
  std::vector<double> cos_, sin_;
  double log_cell_ = 0.0;
};

}  // namespace

Gamma1Result gamma1_small_M(const SphericalModelSpec& spec, const PanchenkoProfile& p, int M,
                            const Gamma1Options& opt) {
  check_profile(spec, p);
  if (M != 1 && M != 2) throw Error(ErrorKind::InvalidInput, "Gamma_1 is implemented for M = 1 and M = 2 only");
  const Eigen::Index n = spec.sites();
  if (n > 3) throw Error(ErrorKind::BudgetExceeded, "Gamma_1 spherical integrals need |Omega| <= 3");
  const int r = p.levels();

  RecursionSpec rs;
  rs.t.assign(p.t.begin(), p.t.begin() + r);
  rs.variance.resize(n * M, r + 1);
  for (Eigen::Index x = 0; x < n; ++x)
    for (int i = 0; i < M; ++i) {
      rs.variance(M * x + i, 0) = spec.xi[x].d1(0.0);
      for (int k = 1; k <= r; ++k)
        rs.variance(M * x + i, k) = spec.xi[x].d1(p.at(x, k)) - spec.xi[x].d1(p.at(x, k - 1));
    }
  rs.origin = Vector::Zero(n * M);

  Gamma1Result out;
  out.leaf.M = M;
  if (M == 1) {
    const Matrix D = spec.D;
    const Vector h = spec.h;
    rs.leaf = [D, h](const Vector& z) { return ising_leaf(D, h, z); };
    rs.leaf_cost = static_cast<double>(1L << n);
  } else {
    // Probe inputs span several standard deviations of the accumulated field.
    std::vector<Vector> probes(3, Vector::Zero(2 * n));
    for (Eigen::Index x = 0; x < n; ++x) {
      const double sd = std::sqrt(std::max(0.0, spec.xi[x].d1(1.0)));
      probes[1](2 * x) = 4.0 * sd;
      probes[2](2 * x) = -3.0 * sd;
      probes[2](2 * x + 1) = 3.0 * sd;
    }
    int K = opt.min_torus_points;
    std::vector<double> prev;
    for (const auto& z : probes) prev.push_back(TorusLeaf(spec.D, spec.h, K)(z));
    double change = std::numeric_limits<double>::infinity();
    while (K < opt.max_torus_points) {
      K *= 2;
      change = 0.0;
      for (std::size_t i = 0; i < probes.size(); ++i) {
        const double v = TorusLeaf(spec.D, spec.h, K)(probes[i]);
        change = std::max(change, std::abs(v - prev[i]) / std::max(1.0, std::abs(v)));
        prev[i] = v;
      }
      if (change <= opt.torus_tol) break;
    }
    out.leaf.torus_points = K;
    out.leaf.refinement_change = change;
    const TorusLeaf leaf(spec.D, spec.h, K);
    rs.leaf = [leaf](const Vector& z) { return leaf(z); };
    rs.leaf_cost = std::pow(static_cast<double>(K), n);
  }

  out.recursion = evaluate_recursion(rs, opt.recursion);
  const double nm = static_cast<double>(n) * M;
  out.value = out.recursion.value / nm;
  out.error = out.recursion.error / nm;
  return out;
}

WMinimum minimize_w(const SphericalModelSpec& spec, const PanchenkoProfile& p, double tol) {
  check_profile(spec, p);
  const Eigen::Index n = spec.sites();
  const Vector d0 = d_zero(spec, p);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto W = [&](const Vector& b) {
    try {
      return w_of_b(spec, p, b);
    } catch (const Error&) {
      return nan;
    }
  };
  auto gradient = [&](const Vector& b, double step) {
    Vector g(n);
    for (Eigen::Index x = 0; x < n; ++x) {
      Vector bp = b, bm = b;
      bp(x) += step;
      bm(x) -= step;
      g(x) = (W(bp) - W(bm)) / (2.0 * step);
    }
    return g;
  };

  WMinimum out;
  Vector b = d0 - spec.D.diagonal();
  b.array() += spec.D.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
  double value = W(b);
  for (int it = 0; it < 200; ++it) {
    const double gstep = 1e-5 * std::max(1.0, b.cwiseAbs().maxCoeff());
    const Vector g = gradient(b, gstep);
    out.iterations = it;
    if (!g.allFinite()) throw Error(ErrorKind::NoConvergence, "W gradient left the domain");
    if (g.cwiseAbs().maxCoeff() <= tol) break;
    Matrix H(n, n);
    const double hstep = 1e-4 * std::max(1.0, b.cwiseAbs().maxCoeff());
    for (Eigen::Index x = 0; x < n; ++x) {
      Vector bp = b, bm = b;
      bp(x) += hstep;
      bm(x) -= hstep;
      H.col(x) = (gradient(bp, gstep) - gradient(bm, gstep)) / (2.0 * hstep);
    }
    H = 0.5 * (H + H.transpose());
    Vector dir;
    Eigen::LLT<Matrix> llt(H);
    dir = llt.info() == Eigen::Success && H.allFinite() ? Vector(-llt.solve(g)) : Vector(-g);
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const Vector trial = b + step * dir;
      const double v = W(trial);
      if (std::isfinite(v) && v <= value + 1e-4 * step * g.dot(dir)) {
        b = trial;
        value = v;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.b = b;
  out.value = value;
  out.gradient = gradient(b, 1e-5 * std::max(1.0, b.cwiseAbs().maxCoeff())).cwiseAbs().maxCoeff();
  return out;
}

AMTrend a_m_trend(const SphericalModelSpec& spec, const PanchenkoProfile& p, const Gamma1Options& opt) {
  AMTrend trend;
  const double g2 = gamma2_closed_form(spec, p);
  for (int M = 1; M <= 2; ++M) {
    Gamma1Result g1;
    AMRow row;
    try {
      g1 = gamma1_small_M(spec, p, M, opt);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BudgetExceeded || opt.recursion.method == RecursionMethod::MonteCarlo) throw;
      Gamma1Options mc = opt;
      mc.recursion.method = RecursionMethod::MonteCarlo;
      g1 = gamma1_small_M(spec, p, M, mc);
    }
    row.method = g1.recursion.method;
    row.M = M;
    row.gamma1 = g1.value;
    row.gamma1_error = g1.error;
    row.gamma2 = g2;
    row.value = g1.value - g2;
    trend.rows.push_back(row);
  }
  trend.w_inf = minimize_w(spec, p).value;
  trend.a_limit = trend.w_inf - g2;
  return trend;
}

}  // namespace elman
