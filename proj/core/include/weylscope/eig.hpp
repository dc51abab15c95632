#pragma once

// Dense Hermitian eigensolvers: closed form for 2x2, a general solver, and a
// windowed solver for banded (slab) matrices.

#include <Eigen/Dense>

#include "weylscope/bloch.hpp"

namespace weylscope {

/// Eigenvalues ascending; column i of `eigenvectors` pairs with eigenvalue i.
/// Vectors inside a numerically degenerate cluster are an arbitrary
/// orthonormal basis of the cluster's eigenspace.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  ComplexMatrix eigenvectors;

  Eigen::Index size() const { return eigenvalues.size(); }
};

/// Closed form through the Pauli decomposition: h0 -+ |h|, eigenvectors from
/// the Bloch-sphere spinors on the branch with the larger denominator.
SpectralDecomposition eigh2(const ComplexMatrix& h2);

/// Full decomposition of an n x n Hermitian matrix.
/// Throws NumericalError on non-Hermitian input (beyond 1e-10 relative) or
/// when the iteration fails to converge.
SpectralDecomposition eigh(const ComplexMatrix& h);

/// Eigenvalues only, ascending.
Eigen::VectorXd eigvalsh(const ComplexMatrix& h);

/// Half-open energy interval (lower, upper).
struct EnergyWindow {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double e) const { return e > lower && e < upper; }
};

/// Hermitian matrix stored densely together with a block size b for which it
/// is block tridiagonal: entries with |i - j| >= 2 b are zero.
struct BandedMatrix {
  ComplexMatrix dense;
  Eigen::Index bandwidth = 0;

  Eigen::Index rows() const { return dense.rows(); }
};

/// Number of eigenvalues strictly below `energy`, from the inertia of a block
/// LDL^dagger factorization of (H - energy) with blocks of size `bandwidth`.
/// Returns -1 when a pivot block is too close to singular for the count to
/// be trusted.
Eigen::Index count_below(const BandedMatrix& h, double energy);

/// Eigenpairs with eigenvalue inside `window`.
/// Throws UsageError on an empty window and NumericalError when more than
/// `max_count` eigenvalues fall inside.
SpectralDecomposition eigh_partial(const BandedMatrix& h, EnergyWindow window,
                                   Eigen::Index max_count);

}  // namespace weylscope
