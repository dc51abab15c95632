#pragma once

// Finite slabs cut perpendicular to one lattice axis: slab Hamiltonians over
// the surface Brillouin torus, surface-resolved in-gap states, spectral flow
// along loops, and Fermi-arc loci.
//
// Layer 0 is the top surface, layer N-1 the bottom one. The surface torus
// uses the two remaining axes in cyclic order: normal 1 -> (theta_2, theta_3),
// normal 2 -> (theta_3, theta_1), normal 3 -> (theta_1, theta_2).

#include <array>
#include <optional>
#include <vector>

#include "weylscope/bloch.hpp"
#include "weylscope/eig.hpp"
#include "weylscope/nodes.hpp"

namespace weylscope {

struct SlabConfig {
  int normal_axis = 1;
  int depth = 40;
  /// Layers counted as "surface" on each side (clamped to depth / 2).
  int surface_layers = 4;
};

/// Throws UsageError for a bad axis, non-positive surface_layers or depth.
void validate_geometry(const SlabConfig& config);

/// validate_geometry plus depth >= 2 * range + 2, which keeps the two
/// surfaces apart at the hopping level. Required by every surface analysis.
void validate(const SlabConfig& config, const TightBindingModel& model);

/// 0-based indices of the surface axes for a 1-based normal axis.
std::array<int, 2> parallel_axes(int normal_axis);

class SurfaceMomentum {
 public:
  SurfaceMomentum() = default;
  SurfaceMomentum(double a, double b) : a_(reduce_angle(a)), b_(reduce_angle(b)) {}

  double operator[](int i) const { return i == 0 ? a_ : b_; }
  /// Flat-torus distance.
  double distance(const SurfaceMomentum& other) const;
  /// The bulk quasimomentum with the given perpendicular angle.
  Quasimomentum bulk(int normal_axis, double perpendicular) const;

 private:
  double a_ = 0.0;
  double b_ = 0.0;
};

/// (N m) x (N m) slab matrix for any depth >= 1. Block (n, n') sums the hoppings whose
/// perpendicular displacement is n' - n, each with phase exp(i r_par . theta_par).
BandedMatrix slab_hamiltonian(const TightBindingModel& model, const SlabConfig& config,
                              const SurfaceMomentum& k_par);

enum class Side { top, bottom };

struct SlabSpectrum {
  SurfaceMomentum k_par;
  std::vector<double> eigenvalues;
  std::vector<double> top_weights;
  std::vector<double> bottom_weights;
  std::vector<double> bulk_weights;
  /// Columns pair with eigenvalues; empty unless requested.
  ComplexMatrix eigenvectors;

  std::size_t size() const { return eigenvalues.size(); }
  /// States with side weight > threshold.
  std::vector<std::size_t> on_side(Side side, double threshold = 0.5) const;
};

/// Builds weights for the given eigenpairs. States that live mostly on the
/// surfaces (top + bottom > 0.5) and lie within `cluster_tolerance` of each
/// other in energy are re-combined inside each cluster so that each one sits
/// on a single side; their energies then become Rayleigh quotients. This
/// undoes the finite-depth hybridization of the two surfaces.
SlabSpectrum resolve_surfaces(const BandedMatrix& slab, const SpectralDecomposition& states,
                              const SlabConfig& config, int bands, const SurfaceMomentum& k_par,
                              bool keep_vectors, double cluster_tolerance = 1e-6);

/// Every slab eigenpair at k_par, with weights.
SlabSpectrum full_slab_spectrum(const TightBindingModel& model, const SlabConfig& config,
                                const SurfaceMomentum& k_par, bool keep_vectors = false);

struct BandInterval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Range of each bulk band over theta_perp at fixed k_par, from `samples`
/// uniform samples.
std::vector<BandInterval> bulk_band_union(const TightBindingModel& model, int normal_axis,
                                          const SurfaceMomentum& k_par, int samples = 512);

/// Smallest distance from `energy` to the sampled bulk bands at k_par.
double bulk_gap_distance(const TightBindingModel& model, int normal_axis,
                         const SurfaceMomentum& k_par, double energy, int samples = 256);

/// In-window slab eigenpairs with surface weights. Throws NumericalError
/// ("window_overlaps_bulk") if the window meets the sampled bulk bands.
SlabSpectrum surface_spectrum(const TightBindingModel& model, const SlabConfig& config,
                              const SurfaceMomentum& k_par, EnergyWindow window);

/// Closed polyline on the surface torus. Vertices are raw angle pairs, so a
/// loop may wind around the torus (e.g. from (-pi, c) to (pi, c)).
struct SurfaceLoop {
  std::vector<std::array<double, 2>> vertices;
};

SurfaceLoop circle_loop(double center_a, double center_b, double radius, int vertices = 256);
/// Straight loop winding once around the torus along surface axis
/// `direction` (0 or 1) at fixed `offset` in the other axis.
SurfaceLoop line_loop(int direction, double offset);
SurfaceLoop reversed(const SurfaceLoop& loop);

struct Crossing {
  /// Loop parameter in [0, 1).
  double parameter = 0.0;
  /// +1 for a branch moving up through the Fermi energy.
  int direction = 0;
  Side side = Side::top;
};

struct SpectralFlowResult {
  std::vector<SurfaceMomentum> loop;
  /// Net flow of top-surface branches.
  int flow = 0;
  int bottom_flow = 0;
  std::vector<Crossing> crossings;
  double window_half_width = 0.0;
  int refinements = 0;
};

struct SpectralFlowOptions {
  double energy = 0.0;
  double exclusion_radius = 0.15;
  /// Band index below the Fermi energy used to locate bulk nodes when
  /// projected_nodes is unset (0 = bands / 2).
  int band_index = 0;
  std::optional<std::vector<SurfaceMomentum>> projected_nodes;
  /// Energy window half-width; 0 = half of the smallest bulk distance to
  /// the Fermi energy along the loop.
  double window_half_width = 0.0;
  int max_refinements = 3;
  double cluster_tolerance = 1e-6;
};

/// Signed count of surface branches crossing the Fermi energy along the loop.
/// Throws UsageError if steps < 100 or the loop is not closed, and
/// NumericalError ("loop_near_node", "branch_ambiguity", "gap_too_small").
SpectralFlowResult spectral_flow(const TightBindingModel& model, const SlabConfig& config,
                                 const SurfaceLoop& loop, int steps,
                                 const SpectralFlowOptions& options = {});

struct ProjectedNode {
  SurfaceMomentum k_par;
  int charge = 0;
};

/// Chern number of the lowest `rank` bulk bands on the torus
/// {theta_perp} x loop, oriented by (theta_perp, loop direction); the
/// spectral flow along the loop should equal it.
int loop_torus_chern(const TightBindingModel& model, int normal_axis, const SurfaceLoop& loop,
                     int rank, int perpendicular_samples = 48, int loop_samples = 200);

/// Distinct surface projections of the nodes with summed chirality.
std::vector<ProjectedNode> project_nodes(const NodeSet& nodes, int normal_axis,
                                         double tolerance = 1e-6);

struct ArcPoint {
  SurfaceMomentum k_par;
  std::array<int, 2> cell{};
  Side side = Side::top;
  double energy = 0.0;
  double weight = 0.0;
};

struct FermiArc {
  double energy = 0.0;
  int grid = 0;
  std::vector<ArcPoint> points;

  std::vector<ArcPoint> on_side(Side side) const;
};

/// Grid scan theta = -pi + 2 pi i / grid over the surface torus, keeping
/// states with |E - energy| < tolerance and side weight > 0.5. Surface
/// states are split by side within clusters of width `tolerance`.
FermiArc fermi_arc(const TightBindingModel& model, const SlabConfig& config, int grid,
                   double energy = 0.0, double tolerance = 0.05);

/// Connected components (8-neighbour, periodic) of one side's arc points;
/// entries index into `arc.points`.
std::vector<std::vector<std::size_t>> arc_components(const FermiArc& arc, Side side);

/// For each target, the distance to the nearest arc point on `side`
/// (infinity when that side is empty).
std::vector<double> arc_endpoint_distances(const FermiArc& arc, Side side,
                                           const std::vector<SurfaceMomentum>& targets);

/// True when a single component on `side` has points within `radius` of
/// both a and b.
bool arc_connects(const FermiArc& arc, Side side, const SurfaceMomentum& a,
                  const SurfaceMomentum& b, double radius);

}  // namespace weylscope
