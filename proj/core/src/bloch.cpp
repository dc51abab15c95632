#include "weylscope/bloch.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <string>

#include "weylscope/errors.hpp"

namespace weylscope {

namespace {

using cd = std::complex<double>;

std::string describe(const LatticeDisplacement& d) {
  std::ostringstream os;
  os << "(" << d[0] << "," << d[1] << "," << d[2] << ")";
  return os.str();
}

double hermitian_deviation(const ComplexMatrix& h) {
  return (h - h.adjoint()).norm() / std::max(1.0, h.norm());
}

}  // namespace

double reduce_angle(double angle) {
  double reduced = angle - kTwoPi * std::floor((angle + kPi) / kTwoPi);
  // floor can land exactly on the excluded endpoint through rounding.
  if (reduced >= kPi) reduced -= kTwoPi;
  if (reduced < -kPi) reduced += kTwoPi;
  return reduced;
}

double circular_distance(double a, double b) {
  return std::abs(reduce_angle(a - b));
}

Quasimomentum::Quasimomentum(double theta1, double theta2, double theta3)
    : theta_(reduce_angle(theta1), reduce_angle(theta2), reduce_angle(theta3)) {}

Quasimomentum::Quasimomentum(const Vec3& theta)
    : Quasimomentum(theta[0], theta[1], theta[2]) {}

double Quasimomentum::distance(const Quasimomentum& other) const {
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    double d = circular_distance(theta_[i], other.theta_[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

bool Quasimomentum::approx_equal(const Quasimomentum& other, double tolerance) const {
  for (int i = 0; i < 3; ++i) {
    if (circular_distance(theta_[i], other.theta_[i]) > tolerance) return false;
  }
  return true;
}

int LatticeDisplacement::max_abs() const {
  return std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
}

TightBindingModel build_model(int bands, std::span<const HoppingTerm> terms) {
  if (bands < 1) {
    throw ModelError("bad_band_count", "band count must be positive, got " + std::to_string(bands));
  }

  TightBindingModel::TermMap raw;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& term = terms[i];
    if (term.amplitude.rows() != bands || term.amplitude.cols() != bands) {
      std::ostringstream os;
      os << "terms[" << i << "] at r=" << describe(term.displacement) << ": amplitude is "
         << term.amplitude.rows() << "x" << term.amplitude.cols() << ", expected " << bands << "x"
         << bands;
      throw ModelError("dimension_mismatch", os.str());
    }
    if (!term.amplitude.allFinite()) {
      throw ModelError("non_finite", "terms[" + std::to_string(i) + "] at r=" +
                                         describe(term.displacement) + " has non-finite entries");
    }
    auto [it, inserted] = raw.try_emplace(term.displacement, term.amplitude);
    if (!inserted) it->second += term.amplitude;
  }

  TightBindingModel model;
  model.bands_ = bands;
  for (const auto& [r, amplitude] : raw) {
    if (model.terms_.count(r)) continue;
    const LatticeDisplacement partner = -r;
    auto p = raw.find(partner);
    ComplexMatrix stored;
    if (r.is_zero()) {
      stored = 0.5 * (amplitude + amplitude.adjoint());
    } else if (p != raw.end()) {
      stored = 0.5 * (amplitude + p->second.adjoint());
    } else {
      stored = amplitude;
    }
    if (stored.isZero(0.0)) continue;
    if (r.is_zero()) {
      model.terms_.emplace(r, stored);
    } else {
      model.terms_.emplace(partner, stored.adjoint());
      model.terms_.emplace(r, std::move(stored));
    }
    model.range_ = std::max(model.range_, r.max_abs());
  }
  return model;
}

ComplexMatrix bloch_matrix(const TightBindingModel& model, const Vec3& theta) {
  ComplexMatrix h = ComplexMatrix::Zero(model.bands(), model.bands());
  for (const auto& [r, amplitude] : model.terms()) {
    const double phase = r[0] * theta[0] + r[1] * theta[1] + r[2] * theta[2];
    h += std::polar(1.0, phase) * amplitude;
  }
  // Exact Hermitian symmetrization removes round-off asymmetry from the sum.
  return 0.5 * (h + h.adjoint());
}

ComplexMatrix bloch_matrix(const TightBindingModel& model, const Quasimomentum& k) {
  return bloch_matrix(model, k.angles());
}

const std::array<Eigen::Matrix2cd, 3>& pauli_matrices() {
  static const std::array<Eigen::Matrix2cd, 3> sigma = [] {
    std::array<Eigen::Matrix2cd, 3> s;
    const cd i(0.0, 1.0);
    s[0] << 0.0, 1.0, 1.0, 0.0;
    s[1] << 0.0, -i, i, 0.0;
    s[2] << 1.0, 0.0, 0.0, -1.0;
    return s;
  }();
  return sigma;
}

ComplexMatrix PauliDecomposition::matrix() const {
  const auto& s = pauli_matrices();
  Eigen::Matrix2cd m = h0 * Eigen::Matrix2cd::Identity() + h[0] * s[0] + h[1] * s[1] + h[2] * s[2];
  return m;
}

PauliDecomposition pauli_decompose(const ComplexMatrix& h2) {
  if (h2.rows() != 2 || h2.cols() != 2) {
    throw NumericalError("not_two_by_two", "Pauli decomposition needs a 2x2 matrix");
  }
  if (hermitian_deviation(h2) > 1e-10) {
    throw NumericalError("not_hermitian", "Pauli decomposition input is not Hermitian");
  }
  // h_i = tr(sigma_i H)/2 written out for the Hermitian part.
  PauliDecomposition d;
  d.h0 = 0.5 * (h2(0, 0).real() + h2(1, 1).real());
  const cd off = 0.5 * (h2(0, 1) + std::conj(h2(1, 0)));
  d.h = Vec3(off.real(), -off.imag(), 0.5 * (h2(0, 0).real() - h2(1, 1).real()));
  return d;
}

double trace_part(const ComplexMatrix& h) {
  return h.trace().real() / static_cast<double>(h.rows());
}

namespace {

// h . sigma model with h1 = sin th1, h2 = sin th2 and
// h3 = 2 + t - cos th1 - cos th2 - cos(fold * th3).
TightBindingModel sine_cosine_model(double t, int fold) {
  const auto& s = pauli_matrices();
  const cd i(0.0, 1.0);
  // sin th = (e^{i th} - e^{-i th}) / 2i, cos th = (e^{i th} + e^{-i th}) / 2
  std::vector<HoppingTerm> terms;
  terms.push_back({{{0, 0, 0}}, (2.0 + t) * s[2]});
  terms.push_back({{{1, 0, 0}}, (-0.5 * i) * s[0] - 0.5 * s[2]});
  terms.push_back({{{0, 1, 0}}, (-0.5 * i) * s[1] - 0.5 * s[2]});
  terms.push_back({{{0, 0, fold}}, -0.5 * s[2]});
  // One of each +-r pair; build_model fills in the partner.
  return build_model(2, terms);
}

}  // namespace

TightBindingModel minimal_model(double t) { return sine_cosine_model(t, 1); }

TightBindingModel two_pair_model(double t) { return sine_cosine_model(t, 2); }

MatrixField as_matrix_field(const TightBindingModel& model) {
  return [model](const Vec3& theta) { return bloch_matrix(model, theta); };
}

MatrixField pauli_field(VectorField h) {
  return [h = std::move(h)](const Vec3& k) {
    PauliDecomposition d;
    d.h = h(k);
    return d.matrix();
  };
}

VectorField h_field(const TightBindingModel& model) {
  if (model.bands() != 2) {
    throw ModelError("not_two_band", "h-vector field requires a two-band model, got " +
                                         std::to_string(model.bands()) + " bands");
  }
  return [model](const Vec3& theta) { return pauli_decompose(bloch_matrix(model, theta)).h; };
}

}  // namespace weylscope
