#pragma once

#include <string>
#include <vector>

#include "elman/types.hpp"

namespace elman {

/// Ordered, distinct site labels. Iteration order is the index order.
struct SiteSet {
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return labels.size(); }
  static SiteSet indexed(std::size_t n);
};

struct LatticeSpec {
  int L = 1;
  int d = 1;
  double mu = 1.0;
  double t = 1.0;

  std::size_t site_count() const;
};

/// Symmetric PSD coupling D over a site set.
struct CouplingMatrix {
  SiteSet sites;
  Matrix entries;

  std::size_t size() const noexcept { return sites.size(); }
};

/// Site labels of the torus [[1,L]]^d in row-major coordinate order.
SiteSet lattice_sites(const LatticeSpec& lat);

/// Periodic graph Laplacian (negative semi-definite). Every site has degree 2d
/// when L >= 2, so the two wrap edges of an axis of length 2 add up to 2.
Matrix build_periodic_laplacian(const LatticeSpec& lat);

/// mu*I - t*Delta.
CouplingMatrix build_coupling(const LatticeSpec& lat);

/// Wraps an explicit matrix after checking symmetry and semi-definiteness.
CouplingMatrix make_coupling(const Matrix& entries);

/// Throws NotPositiveDefinite when the Cholesky factorization fails.
double logdet_pd(const Matrix& m);

/// Diagonal of M^{-1} for positive definite M.
Vector inverse_diagonal(const Matrix& m);

/// Inverse of a positive definite matrix via Cholesky.
Matrix inverse_pd(const Matrix& m);

/// True when the Cholesky factorization of m succeeds.
bool is_positive_definite(const Matrix& m);

void validate_lattice(const LatticeSpec& lat);

}  // namespace elman
