#include "elman/lattice.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "elman/error.hpp"

namespace elman {
namespace {

Eigen::LLT<Matrix> factor(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw Error(ErrorKind::InvalidInput, "matrix must be square and non-empty");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success || !llt.matrixLLT().diagonal().allFinite() ||
      (llt.matrixLLT().diagonal().array() <= 0.0).any())
    throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
  return llt;
}

}  // namespace

SiteSet SiteSet::indexed(std::size_t n) {
  SiteSet s;
  s.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.labels.push_back(std::to_string(i));
  return s;
}

std::size_t LatticeSpec::site_count() const {
  std::size_t n = 1;
  for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(L);
  return n;
}

void validate_lattice(const LatticeSpec& lat) {
  if (lat.L < 1) throw Error(ErrorKind::InvalidInput, "lattice side L must be >= 1");
  if (lat.d < 0) throw Error(ErrorKind::InvalidInput, "lattice dimension d must be >= 0");
  if (!(lat.mu > 0.0)) throw Error(ErrorKind::InvalidInput, "mass mu must be positive");
  if (!(lat.t > 0.0)) throw Error(ErrorKind::InvalidInput, "interaction t must be positive");
  if (lat.site_count() > 4096) throw Error(ErrorKind::InvalidInput, "lattice too large for dense storage");
}

SiteSet lattice_sites(const LatticeSpec& lat) {
  const std::size_t n = lat.site_count();
  SiteSet s;
  s.labels.reserve(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::string label = "(";
    std::size_t rem = idx;
    std::vector<std::size_t> coord(lat.d);
    for (int k = lat.d - 1; k >= 0; --k) {
      coord[k] = rem % lat.L;
      rem /= lat.L;
    }
    for (int k = 0; k < lat.d; ++k) label += (k ? "," : "") + std::to_string(coord[k] + 1);
    s.labels.push_back(label + ")");
  }
  return s;
}

Matrix build_periodic_laplacian(const LatticeSpec& lat) {
  validate_lattice(lat);
  const auto n = static_cast<Eigen::Index>(lat.site_count());
  Matrix lap = Matrix::Zero(n, n);
  if (lat.L == 1) return lap;
  Eigen::Index stride = 1;
  for (int axis = lat.d - 1; axis >= 0; --axis) {
    for (Eigen::Index x = 0; x < n; ++x) {
      const Eigen::Index c = (x / stride) % lat.L;
      const Eigen::Index up = x + (((c + 1) % lat.L) - c) * stride;
      const Eigen::Index down = x + (((c + lat.L - 1) % lat.L) - c) * stride;
      lap(x, up) += 1.0;
      lap(x, down) += 1.0;
      lap(x, x) -= 2.0;
    }
    stride *= lat.L;
  }
  return lap;
}

CouplingMatrix build_coupling(const LatticeSpec& lat) {
  const Matrix lap = build_periodic_laplacian(lat);
  CouplingMatrix c;
  c.sites = lattice_sites(lat);
  c.entries = lat.mu * Matrix::Identity(lap.rows(), lap.cols()) - lat.t * lap;
  return c;
}

CouplingMatrix make_coupling(const Matrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() == 0)
    throw Error(ErrorKind::InvalidInput, "coupling matrix must be square and non-empty");
  if (!entries.allFinite()) throw Error(ErrorKind::InvalidInput, "coupling matrix has non-finite entries");
  if ((entries - entries.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorKind::InvalidInput, "coupling matrix is not symmetric");
  const double scale = entries.norm();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(entries, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(scale, 1.0))
    throw Error(ErrorKind::InvalidInput, "coupling matrix is not positive semi-definite");
  CouplingMatrix c;
  c.sites = SiteSet::indexed(static_cast<std::size_t>(entries.rows()));
  c.entries = 0.5 * (entries + entries.transpose());
  return c;
}

double logdet_pd(const Matrix& m) {
  const auto llt = factor(m);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Matrix inverse_pd(const Matrix& m) {
  const auto llt = factor(m);
  return llt.solve(Matrix::Identity(m.rows(), m.cols()));
}

Vector inverse_diagonal(const Matrix& m) { return inverse_pd(m).diagonal(); }

bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all();
}

}  // namespace elman
