#pragma once

// Gauge-invariant Berry-phase numerics on link variables: Chern numbers of
// torus slices and small spheres, slice Chern profiles, and Dirac strings.
//
// Sign convention: c = (i / 2 pi) * integral of the curvature of
// A = <psi|d psi>, which makes the lower band of k . sigma carry +1 on a
// sphere around k = 0 (outward orientation). A slice perpendicular to axis 3
// is oriented by (theta_1, theta_2); the other axes follow cyclically, so
// every slice orientation followed by its axis is the torus orientation.

#include <array>
#include <vector>

#include "weylscope/bloch.hpp"
#include "weylscope/nodes.hpp"

namespace weylscope {

struct BandProjector {
  Quasimomentum k;
  ComplexMatrix projector;
  int rank = 1;
};

/// Projector onto the lowest `rank` eigenvectors at k. Throws NumericalError
/// ("gap_closed") if lambda_{rank+1} - lambda_rank <= 1e-10.
BandProjector band_projector(const TightBindingModel& model, const Quasimomentum& k, int rank);

/// Orthonormal basis (m x rank) of the lowest `rank` eigenvectors, or
/// NumericalError ("gap_closed") when the gap above them is <= min_gap.
ComplexMatrix occupied_frame(const MatrixField& field, const Vec3& k, int rank, double min_gap);

/// Periodic rows x cols lattice of occupied frames; frame (i, j) sits at the
/// i-th step along the first oriented direction and the j-th along the second.
struct FrameGrid {
  int rows = 0;
  int cols = 0;
  std::vector<ComplexMatrix> frames;

  const ComplexMatrix& at(int i, int j) const {
    const int wi = ((i % rows) + rows) % rows;
    const int wj = ((j % cols) + cols) % cols;
    return frames[static_cast<std::size_t>(wi * cols + wj)];
  }
};

struct LatticeFlux {
  int chern = 0;
  /// Unrounded plaquette sum in units of 2 pi (an integer up to round-off).
  double value = 0.0;
  /// Largest |plaquette phase|; near pi means the grid is too coarse.
  double max_plaquette_phase = 0.0;
};

/// Chern number of a periodic frame lattice from plaquette products of link
/// determinants det(F_a^dagger F_b).
LatticeFlux lattice_flux(const FrameGrid& grid);

/// The two in-slice axes (0-based) for a slice perpendicular to `axis` (1-based).
std::array<int, 2> slice_axes(int axis);

/// Occupied frames on the slice {theta_axis = angle}, grid x grid points.
FrameGrid slice_frames(const MatrixField& field, int rank, int axis, double angle, int grid);

/// Chern number of the lowest `rank` bands on the 2-torus {theta_axis = angle}.
/// Doubles the grid (at most twice) when a plaquette phase exceeds pi/2.
/// Throws NumericalError ("node_on_slice") if the gap on the slice drops
/// below 1e-6 and ("plaquette_phase_near_pi") if refinement does not help.
int chern_number_slice(const MatrixField& field, int rank, int axis, double angle, int grid);
int chern_number_slice(const TightBindingModel& model, int rank, int axis, double angle, int grid);

/// Chern number of the lowest `rank` bands over the sphere |k - center| = radius
/// on a mesh x mesh latitude-longitude lattice (poles shared).
/// Throws NumericalError on gap closure or a non-integer plaquette sum.
int berry_flux_sphere(const MatrixField& field, int rank, const Vec3& center, double radius,
                      int mesh);

struct ChernProfile {
  int axis = 3;
  std::vector<double> slice_angles;
  std::vector<int> chern;
  /// Distinct node positions along the axis and the chirality sum at each.
  std::vector<double> node_projections;
  std::vector<int> projection_charges;
};

/// Slice Chern numbers along `axis` at `slices` angles. Each slice starts at
/// the midpoint of its uniform cell and moves within the cell when a node
/// projection is closer than half a cell. Verifies the jump rule (the
/// change across a projection equals the chirality sum there) before
/// returning; throws NumericalError ("inconsistent_profile",
/// "slices_too_coarse") otherwise.
ChernProfile chern_profile(const TightBindingModel& model, int rank, int axis, int slices,
                           int grid, const NodeSet& nodes);

struct StringSegment {
  /// The segment runs in the +axis direction from start to end, wrapping
  /// through pi when start > end.
  double start_angle = 0.0;
  double end_angle = 0.0;
  int multiplicity = 0;
  bool full_circle = false;
};

struct DiracString {
  int axis = 3;
  std::vector<StringSegment> segments;
};

/// Maximal runs of constant nonzero slice Chern number between node
/// projections. Throws NumericalError ("inconsistent_profile") when the
/// profile disagrees with the node set.
DiracString dirac_string(const ChernProfile& profile, const NodeSet& nodes);

/// Groups node positions along `axis` (1-based) into distinct projections
/// (within `tolerance`) with summed chirality, sorted by angle.
std::vector<std::pair<double, int>> node_projections(const NodeSet& nodes, int axis,
                                                     double tolerance = 1e-6);

}  // namespace weylscope
