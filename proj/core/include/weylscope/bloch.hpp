#pragma once

// Finite-range tight-binding models on Z^3 and their Bloch Hamiltonians
// over the Brillouin 3-torus.
//
// Conventions used everywhere downstream:
//   H(theta) = sum_r T_r exp(i r . theta),  theta = (theta_1, theta_2, theta_3)
//   Pauli basis sigma_1, sigma_2, sigma_3 with -i sigma_1 sigma_2 sigma_3 = 1
//   The torus is oriented by the coordinate order (theta_1, theta_2, theta_3).

#include <array>
#include <compare>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace weylscope {

using ComplexMatrix = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle to the canonical interval [-pi, pi).
double reduce_angle(double angle);

/// Distance between two angles on the circle, in [0, pi].
double circular_distance(double a, double b);

/// Point on the Brillouin 3-torus with canonically reduced angles.
class Quasimomentum {
 public:
  Quasimomentum() : theta_(Vec3::Zero()) {}
  Quasimomentum(double theta1, double theta2, double theta3);
  explicit Quasimomentum(const Vec3& theta);

  double operator[](int axis) const { return theta_[axis]; }
  const Vec3& angles() const { return theta_; }

  /// Flat-torus distance (per-axis circular distances, Euclidean norm).
  double distance(const Quasimomentum& other) const;

  /// Equality of reduced angles modulo 2 pi within `tolerance`.
  bool approx_equal(const Quasimomentum& other, double tolerance = 1e-12) const;

 private:
  Vec3 theta_;
};

/// Integer lattice displacement r in units of the lattice basis.
struct LatticeDisplacement {
  std::array<int, 3> r{0, 0, 0};

  LatticeDisplacement operator-() const { return {{-r[0], -r[1], -r[2]}}; }
  int operator[](int axis) const { return r[axis]; }
  int max_abs() const;
  bool is_zero() const { return r[0] == 0 && r[1] == 0 && r[2] == 0; }

  auto operator<=>(const LatticeDisplacement&) const = default;
};

struct HoppingTerm {
  LatticeDisplacement displacement;
  ComplexMatrix amplitude;
};

/// Immutable Hermitian tight-binding model. Construct through build_model.
class TightBindingModel {
 public:
  using TermMap = std::map<LatticeDisplacement, ComplexMatrix>;

  int bands() const { return bands_; }
  /// Largest |r_i| over stored terms (R_max); zero for on-site-only models.
  int range() const { return range_; }
  const TermMap& terms() const { return terms_; }

  friend TightBindingModel build_model(int bands, std::span<const HoppingTerm> terms);

 private:
  TightBindingModel() = default;

  int bands_ = 0;
  int range_ = 0;
  TermMap terms_;
};

/// Validates and Hermitian-completes a list of hopping terms.
///
/// Duplicate displacements are summed. When both r and -r are supplied the
/// stored term is (T_r + T_{-r}^dagger)/2; when only one of the pair is
/// supplied its conjugate transpose is filled in at the partner. Terms that
/// are exactly zero are dropped.
///
/// Throws ModelError on non-positive band count, amplitude dimension
/// mismatch, or non-finite entries.
TightBindingModel build_model(int bands, std::span<const HoppingTerm> terms);

/// H(theta) at a point given in (possibly unreduced) torus coordinates.
ComplexMatrix bloch_matrix(const TightBindingModel& model, const Vec3& theta);
ComplexMatrix bloch_matrix(const TightBindingModel& model, const Quasimomentum& k);

/// H2 = h0 * 1 + h . sigma
struct PauliDecomposition {
  double h0 = 0.0;
  Vec3 h = Vec3::Zero();

  ComplexMatrix matrix() const;
};

/// sigma_1, sigma_2, sigma_3.
const std::array<Eigen::Matrix2cd, 3>& pauli_matrices();

/// Throws NumericalError if H2 is not 2x2 or deviates from Hermitian by more
/// than 1e-10 (relative to max(1, |H2|)).
PauliDecomposition pauli_decompose(const ComplexMatrix& h2);

/// trace(H)/m, the trace-ful part for any band count.
double trace_part(const ComplexMatrix& h);

/// Two-band model with h = (sin th1, sin th2, 2 + t - cos th1 - cos th2 - cos th3).
/// Weyl points at (0, 0, +-arccos t) for |t| < 1.
TightBindingModel minimal_model(double t);

/// Two-band model with h3 = 2 + t - cos th1 - cos th2 - cos 2 th3, i.e. the
/// minimal model folded twice along th3: four Weyl points for |t| < 1.
TightBindingModel two_pair_model(double t);

/// Matrix-valued function on torus coordinates. Analysis routines accept
/// these so that analytic local fixtures (not lattice periodic) can be used
/// alongside tight-binding models.
using MatrixField = std::function<ComplexMatrix(const Vec3&)>;

/// Three-vector field h(k) of a two-band family.
using VectorField = std::function<Vec3(const Vec3&)>;

MatrixField as_matrix_field(const TightBindingModel& model);

/// h . sigma for a given vector field.
MatrixField pauli_field(VectorField h);

/// h-vector of a two-band model; throws ModelError if bands() != 2.
VectorField h_field(const TightBindingModel& model);

}  // namespace weylscope
