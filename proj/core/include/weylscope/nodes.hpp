#pragma once

// Weyl-point search: coarse gap scan, Newton refinement, local indices by
// Jacobian sign and by sphere degree, and global charge cancellation.

#include <array>
#include <functional>
#include <limits>
#include <vector>

#include "weylscope/bloch.hpp"

namespace weylscope {

struct WeylNode {
  Quasimomentum position;
  int chirality = 0;
  bool nondegenerate = false;
  /// |h| at the node for two-band models, the gap lambda_{b+1} - lambda_b otherwise.
  double residual = 0.0;
  /// det of dh at the node (in a local two-band frame when bands > 2).
  double jacobian_det = 0.0;
};

struct NodeSet {
  std::vector<WeylNode> nodes;
  int total_charge = 0;
};

struct ScanCandidate {
  std::array<int, 3> cell{};
  Quasimomentum center;
  double gap = 0.0;
  /// Gap is no larger than at any of the 26 neighbouring grid points.
  bool local_minimum = false;
};

/// Grid points theta_i = -pi + 2 pi i / grid where lambda_{b+1} - lambda_b
/// falls below `gap_threshold` (band_index b is 1-based). Ordered by cell.
std::vector<ScanCandidate> scan_nodes(const TightBindingModel& model, int band_index, int grid,
                                      double gap_threshold);

struct RefineOptions {
  double node_tolerance = 1e-8;
  double degeneracy_threshold = 1e-6;
  double fd_step = 1e-5;
  int max_iterations = 50;
  /// Largest per-axis displacement from the starting point before the
  /// result is rejected as an escaped (probably degenerate or line) node.
  double max_displacement = std::numeric_limits<double>::infinity();
  /// Sphere used for the index of degenerate nodes.
  double degree_radius = 0.1;
  int degree_mesh = 48;
};

/// Newton iteration on h (two bands) or on a local two-band frame of bands
/// (b, b+1), refreshed every step (more bands). Throws NumericalError
/// ("node_no_convergence", "node_escaped") on failure.
WeylNode refine_node(const TightBindingModel& model, int band_index, const Quasimomentum& k0,
                     const RefineOptions& options = {});

/// Jacobian of h at `k` by central differences.
Eigen::Matrix3d jacobian(const VectorField& h, const Vec3& k, double step = 1e-5);

struct DegreeResult {
  int degree = 0;
  /// Quadrature value before rounding.
  double value = 0.0;
};

/// Degree of h/|h| on the sphere |k - center| = radius: midpoint quadrature of
/// the pulled-back area form on a mesh x mesh latitude-longitude grid,
/// divided by 4 pi. Throws NumericalError if h vanishes on the sphere or the
/// value is not within 0.05 of an integer; UsageError if mesh < 16.
DegreeResult sphere_degree(const VectorField& h, const Vec3& center, double radius, int mesh);

/// Local index of the crossing between bands b and b+1. Two-band models use
/// the h-vector degree; models with more bands use the Berry flux of the
/// lowest b bands through the sphere.
DegreeResult sphere_degree(const TightBindingModel& model, int band_index,
                           const Quasimomentum& center, double radius, int mesh);

struct FindNodesOptions {
  int grid = 32;
  double gap_threshold = 0.5;
  double merge_radius = 1e-4;
  RefineOptions refine;
  /// Optional restriction of the search domain; nodes outside are dropped.
  std::function<bool(const Quasimomentum&)> region;
};

/// scan_nodes, then refine_node from every candidate, then merge nodes
/// closer than merge_radius. Candidates whose refinement fails are skipped.
NodeSet find_nodes(const TightBindingModel& model, int band_index,
                   const FindNodesOptions& options = {});

struct CancellationCheck {
  int total_charge = 0;
  bool balanced = true;
  int degenerate_nodes = 0;
};

/// Sum of chiralities; `balanced` is false when the sum is nonzero, which
/// signals an incomplete scan (the sum vanishes for any complete scan).
CancellationCheck check_cancellation(const NodeSet& nodes);

}  // namespace weylscope
