#include "weylscope/eig.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "weylscope/errors.hpp"

namespace weylscope {

namespace {

using cd = std::complex<double>;

void require_hermitian(const ComplexMatrix& h, const char* who) {
  if (h.rows() != h.cols() || h.rows() == 0) {
    std::ostringstream os;
    os << who << ": expected a non-empty square matrix, got " << h.rows() << "x" << h.cols();
    throw NumericalError("bad_shape", os.str());
  }
  const double deviation = (h - h.adjoint()).norm() / std::max(1.0, h.norm());
  if (deviation > 1e-10) {
    std::ostringstream os;
    os << who << ": matrix is not Hermitian (relative deviation " << deviation << ")";
    throw NumericalError("not_hermitian", os.str());
  }
}

SpectralDecomposition empty_decomposition(Eigen::Index n) {
  SpectralDecomposition d;
  d.eigenvalues.resize(0);
  d.eigenvectors.resize(n, 0);
  return d;
}

}  // namespace

SpectralDecomposition eigh2(const ComplexMatrix& h2) {
  const PauliDecomposition p = pauli_decompose(h2);
  const double norm = p.h.norm();

  SpectralDecomposition d;
  d.eigenvalues = Eigen::Vector2d(p.h0 - norm, p.h0 + norm);
  d.eigenvectors = ComplexMatrix::Identity(2, 2);
  if (norm == 0.0) return d;

  const Vec3 n = p.h / norm;
  const cd plus(n[0], n[1]);    // n1 + i n2
  const cd minus(n[0], -n[1]);  // n1 - i n2
  Eigen::Vector2cd lower, upper;
  if (n[2] <= 0.0) {
    lower << 1.0 - n[2], -plus;
    lower /= std::sqrt(2.0 * (1.0 - n[2]));
    upper << minus, 1.0 - n[2];
    upper /= std::sqrt(2.0 * (1.0 - n[2]));
  } else {
    lower << -minus, 1.0 + n[2];
    lower /= std::sqrt(2.0 * (1.0 + n[2]));
    upper << 1.0 + n[2], plus;
    upper /= std::sqrt(2.0 * (1.0 + n[2]));
  }
  d.eigenvectors.col(0) = lower;
  d.eigenvectors.col(1) = upper;
  return d;
}

SpectralDecomposition eigh(const ComplexMatrix& h) {
  require_hermitian(h, "eigh");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    const ComplexMatrix& v = solver.eigenvectors();
    ComplexMatrix rotated = v.adjoint() * h * v;
    rotated.diagonal().setZero();
    std::ostringstream os;
    os << "eigh: no convergence for " << h.rows() << "x" << h.cols()
       << " matrix, off-diagonal norm reached " << rotated.norm();
    throw NumericalError("eig_no_convergence", os.str());
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::VectorXd eigvalsh(const ComplexMatrix& h) {
  require_hermitian(h, "eigvalsh");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigvalsh: no convergence for " << h.rows() << "x" << h.cols() << " matrix";
    throw NumericalError("eig_no_convergence", os.str());
  }
  return solver.eigenvalues();
}

Eigen::Index count_below(const BandedMatrix& h, double energy) {
  const Eigen::Index n = h.rows();
  const Eigen::Index b = std::max<Eigen::Index>(1, std::min(h.bandwidth, n));
  const double scale = std::max(1.0, h.dense.cwiseAbs().maxCoeff()) + std::abs(energy);
  const double singular = 1e-11 * scale;

  Eigen::Index negative = 0;
  ComplexMatrix pivot_inverse;  // D_{k-1}^{-1}
  for (Eigen::Index start = 0; start < n; start += b) {
    const Eigen::Index size = std::min(b, n - start);
    ComplexMatrix d = h.dense.block(start, start, size, size);
    d.diagonal().array() -= energy;
    if (start > 0) {
      const Eigen::Index prev = start - b;
      const auto coupling = h.dense.block(start, prev, size, b);
      d -= coupling * pivot_inverse * coupling.adjoint();
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (d + d.adjoint()));
    const Eigen::VectorXd& lambda = solver.eigenvalues();
    if (lambda.cwiseAbs().minCoeff() < singular) return -1;
    negative += (lambda.array() < 0.0).count();
    pivot_inverse = solver.eigenvectors() * lambda.cwiseInverse().asDiagonal() *
                    solver.eigenvectors().adjoint();
  }
  return negative;
}

SpectralDecomposition eigh_partial(const BandedMatrix& h, EnergyWindow window,
                                   Eigen::Index max_count) {
  if (!(window.lower < window.upper)) {
    throw UsageError("empty_window", "eigh_partial: energy window is empty");
  }
  const Eigen::Index below_upper = count_below(h, window.upper);
  const Eigen::Index below_lower = count_below(h, window.lower);
  if (below_upper >= 0 && below_lower >= 0) {
    const Eigen::Index inside = below_upper - below_lower;
    if (inside == 0) return empty_decomposition(h.rows());
    if (inside > max_count) {
      std::ostringstream os;
      os << "eigh_partial: " << inside << " eigenvalues in (" << window.lower << ", "
         << window.upper << "), more than the requested maximum " << max_count;
      throw NumericalError("too_many_eigenvalues", os.str());
    }
  }

  const SpectralDecomposition full = eigh(h.dense);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < full.size(); ++i) {
    if (window.contains(full.eigenvalues[i])) keep.push_back(i);
  }
  if (static_cast<Eigen::Index>(keep.size()) > max_count) {
    std::ostringstream os;
    os << "eigh_partial: " << keep.size() << " eigenvalues in (" << window.lower << ", "
       << window.upper << "), more than the requested maximum " << max_count;
    throw NumericalError("too_many_eigenvalues", os.str());
  }
  SpectralDecomposition out;
  out.eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
  out.eigenvectors.resize(h.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    out.eigenvalues[col] = full.eigenvalues[keep[j]];
    out.eigenvectors.col(col) = full.eigenvectors.col(keep[j]);
  }
  return out;
}

}  // namespace weylscope
