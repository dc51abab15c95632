#include "weylscope/nodes.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "weylscope/berry.hpp"
#include "weylscope/eig.hpp"
#include "weylscope/errors.hpp"
#include "weylscope/parallel.hpp"

namespace weylscope {

namespace {

void require_band_index(const TightBindingModel& model, int band_index) {
  if (band_index < 1 || band_index >= model.bands()) {
    std::ostringstream os;
    os << "band index " << band_index << " outside [1, " << model.bands() << ")";
    throw UsageError("bad_band_index", os.str());
  }
}

double band_gap(const TightBindingModel& model, int band_index, const Vec3& k) {
  const ComplexMatrix h = bloch_matrix(model, k);
  if (model.bands() == 2) return 2.0 * pauli_decompose(h).h.norm();
  const Eigen::VectorXd lambda = eigvalsh(h);
  return lambda[band_index] - lambda[band_index - 1];
}

// h-vector of bands (b, b+1) seen through a frame fixed at `anchor`. For two
// bands this is the global h field and the frame is the identity.
VectorField local_h(const TightBindingModel& model, int band_index, const Vec3& anchor) {
  if (model.bands() == 2) return h_field(model);
  const SpectralDecomposition s = eigh(bloch_matrix(model, anchor));
  ComplexMatrix frame = s.eigenvectors.middleCols(band_index - 1, 2);
  return [model, frame = std::move(frame)](const Vec3& k) {
    const ComplexMatrix reduced = frame.adjoint() * bloch_matrix(model, k) * frame;
    return pauli_decompose(0.5 * (reduced + reduced.adjoint())).h;
  };
}

double max_axis_displacement(const Vec3& a, const Vec3& b) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) worst = std::max(worst, circular_distance(a[i], b[i]));
  return worst;
}

Vec3 sphere_point(const Vec3& center, double radius, double polar, double azimuth) {
  return center + radius * Vec3(std::sin(polar) * std::cos(azimuth),
                                std::sin(polar) * std::sin(azimuth), std::cos(polar));
}

}  // namespace

std::vector<ScanCandidate> scan_nodes(const TightBindingModel& model, int band_index, int grid,
                                      double gap_threshold) {
  require_band_index(model, band_index);
  if (grid < 8) throw UsageError("bad_grid", "node scan grid must be at least 8");

  const double spacing = kTwoPi / grid;
  const auto n = static_cast<std::size_t>(grid);
  auto index = [n](std::size_t i, std::size_t j, std::size_t l) { return (i * n + j) * n + l; };
  auto angle = [spacing](std::size_t i) { return -kPi + spacing * static_cast<double>(i); };

  std::vector<double> gaps(n * n * n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t l = 0; l < n; ++l) {
        gaps[index(i, j, l)] = band_gap(model, band_index, Vec3(angle(i), angle(j), angle(l)));
      }
    }
  });

  std::vector<ScanCandidate> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t l = 0; l < n; ++l) {
        const double g = gaps[index(i, j, l)];
        if (!(g < gap_threshold)) continue;
        bool minimum = true;
        for (int di = -1; di <= 1 && minimum; ++di) {
          for (int dj = -1; dj <= 1 && minimum; ++dj) {
            for (int dl = -1; dl <= 1; ++dl) {
              if (di == 0 && dj == 0 && dl == 0) continue;
              const std::size_t a = (i + n + di) % n, b = (j + n + dj) % n, c = (l + n + dl) % n;
              if (gaps[index(a, b, c)] < g) {
                minimum = false;
                break;
              }
            }
          }
        }
        ScanCandidate cand;
        cand.cell = {static_cast<int>(i), static_cast<int>(j), static_cast<int>(l)};
        cand.center = Quasimomentum(angle(i), angle(j), angle(l));
        cand.gap = g;
        cand.local_minimum = minimum;
        out.push_back(cand);
      }
    }
  }
  return out;
}

Eigen::Matrix3d jacobian(const VectorField& h, const Vec3& k, double step) {
  Eigen::Matrix3d j;
  for (int axis = 0; axis < 3; ++axis) {
    Vec3 forward = k, backward = k;
    forward[axis] += step;
    backward[axis] -= step;
    j.col(axis) = (h(forward) - h(backward)) / (2.0 * step);
  }
  return j;
}

namespace {

// Newton refinement and Jacobian classification; degenerate nodes are left
// with chirality 0 for the caller to resolve.
WeylNode locate_node(const TightBindingModel& model, int band_index, const Quasimomentum& k0,
                     const RefineOptions& options) {
  const bool two_band = model.bands() == 2;
  auto merit = [&](const Vec3& k) {
    const double g = band_gap(model, band_index, k);
    return two_band ? 0.5 * g : g;
  };

  Vec3 k = k0.angles();
  double current = merit(k);
  constexpr double kConverged = 1e-14;
  for (int iteration = 0; iteration < options.max_iterations && current > kConverged;
       ++iteration) {
    const VectorField h = local_h(model, band_index, k);
    const Eigen::Matrix3d j = jacobian(h, k, options.fd_step);
    const Vec3 step = j.completeOrthogonalDecomposition().solve(-h(k));
    if (!step.allFinite()) break;

    double scale = 1.0;
    double trial = merit(k + step);
    for (int halving = 0; halving < 30 && !(trial < current); ++halving) {
      scale *= 0.5;
      trial = merit(k + scale * step);
    }
    if (!(trial < current)) break;
    k += scale * step;
    current = trial;
    if (scale * step.norm() < 1e-15) break;
  }

  if (!(current <= options.node_tolerance)) {
    std::ostringstream os;
    os << "refinement from (" << k0[0] << ", " << k0[1] << ", " << k0[2]
       << ") did not converge in " << options.max_iterations << " iterations (residual "
       << current << ")";
    throw NumericalError("node_no_convergence", os.str());
  }
  if (max_axis_displacement(k, k0.angles()) > options.max_displacement) {
    std::ostringstream os;
    os << "refinement from (" << k0[0] << ", " << k0[1] << ", " << k0[2]
       << ") left its scan cell; probable degenerate or line node";
    throw NumericalError("node_escaped", os.str());
  }

  WeylNode node;
  node.position = Quasimomentum(k);
  node.residual = current;
  const VectorField h = local_h(model, band_index, k);
  node.jacobian_det = jacobian(h, k, options.fd_step).determinant();
  node.nondegenerate = std::abs(node.jacobian_det) > options.degeneracy_threshold;
  if (node.nondegenerate) node.chirality = node.jacobian_det > 0.0 ? 1 : -1;
  return node;
}

}  // namespace

WeylNode refine_node(const TightBindingModel& model, int band_index, const Quasimomentum& k0,
                     const RefineOptions& options) {
  require_band_index(model, band_index);
  WeylNode node = locate_node(model, band_index, k0, options);
  if (!node.nondegenerate) {
    node.chirality = sphere_degree(model, band_index, node.position, options.degree_radius,
                                   options.degree_mesh)
                         .degree;
  }
  return node;
}

DegreeResult sphere_degree(const VectorField& h, const Vec3& center, double radius, int mesh) {
  if (mesh < 16) throw UsageError("bad_mesh", "sphere mesh must be at least 16");
  if (!(radius > 0.0)) throw UsageError("bad_radius", "sphere radius must be positive");

  const double d_polar = kPi / mesh;
  const double d_azimuth = kTwoPi / mesh;
  const auto n = static_cast<std::size_t>(mesh);

  double smallest = std::numeric_limits<double>::infinity();
  double largest = 0.0;
  auto unit = [&](double polar, double azimuth) -> Vec3 {
    const Vec3 v = h(sphere_point(center, radius, polar, azimuth));
    const double norm = v.norm();
    smallest = std::min(smallest, norm);
    largest = std::max(largest, norm);
    return norm > 0.0 ? Vec3(v / norm) : Vec3::Zero();
  };

  // Values on latitude lines (mesh + 1 rows) at cell-centre longitudes, on
  // longitude lines at cell-centre latitudes, and at cell centres.
  std::vector<Vec3> on_latitude((n + 1) * n), on_longitude(n * n), centre(n * n);
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      on_latitude[i * n + j] = unit(d_polar * i, d_azimuth * (j + 0.5));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      on_longitude[i * n + j] = unit(d_polar * (i + 0.5), d_azimuth * j);
      centre[i * n + j] = unit(d_polar * (i + 0.5), d_azimuth * (j + 0.5));
    }
  }
  if (!(smallest > 1e-12 * std::max(1.0, largest))) {
    throw NumericalError("gap_closes_on_sphere",
                         "h vanishes on the degree sphere; radius reaches another node");
  }

  double integral = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Vec3 d_theta = (on_latitude[(i + 1) * n + j] - on_latitude[i * n + j]) / d_polar;
      const Vec3 d_phi = (on_longitude[i * n + (j + 1) % n] - on_longitude[i * n + j]) / d_azimuth;
      integral += centre[i * n + j].dot(d_theta.cross(d_phi)) * d_polar * d_azimuth;
    }
  }

  DegreeResult result;
  result.value = integral / (4.0 * kPi);
  result.degree = static_cast<int>(std::lround(result.value));
  if (std::abs(result.value - result.degree) >= 0.05) {
    std::ostringstream os;
    os << "sphere degree quadrature gave " << result.value
       << ", not within 0.05 of an integer; refine the mesh";
    throw NumericalError("degree_not_integer", os.str());
  }
  return result;
}

DegreeResult sphere_degree(const TightBindingModel& model, int band_index,
                           const Quasimomentum& center, double radius, int mesh) {
  require_band_index(model, band_index);
  if (model.bands() == 2) return sphere_degree(h_field(model), center.angles(), radius, mesh);
  const int flux =
      berry_flux_sphere(as_matrix_field(model), band_index, center.angles(), radius, mesh);
  return {flux, static_cast<double>(flux)};
}

NodeSet find_nodes(const TightBindingModel& model, int band_index,
                   const FindNodesOptions& options) {
  const std::vector<ScanCandidate> candidates =
      scan_nodes(model, band_index, options.grid, options.gap_threshold);

  RefineOptions refine = options.refine;
  refine.max_displacement = std::min(refine.max_displacement, 1.5 * kTwoPi / options.grid);

  std::vector<std::optional<WeylNode>> refined(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    if (options.region && !options.region(candidates[i].center)) return;
    try {
      refined[i] = locate_node(model, band_index, candidates[i].center, refine);
    } catch (const NumericalError&) {
      // Another candidate closer to the node picks it up.
    }
  });

  NodeSet set;
  for (auto& node : refined) {
    if (!node) continue;
    if (options.region && !options.region(node->position)) continue;
    auto same = std::find_if(set.nodes.begin(), set.nodes.end(), [&](const WeylNode& existing) {
      return existing.position.distance(node->position) < options.merge_radius;
    });
    if (same == set.nodes.end()) {
      set.nodes.push_back(*node);
    } else if (node->residual < same->residual) {
      *same = *node;
    }
  }

  // Degenerate nodes get their index from a sphere that cannot reach a
  // neighbouring node.
  for (auto& node : set.nodes) {
    if (node.nondegenerate) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& other : set.nodes) {
      if (&other != &node) nearest = std::min(nearest, node.position.distance(other.position));
    }
    const double radius = std::min(refine.degree_radius, 0.45 * nearest);
    node.chirality =
        sphere_degree(model, band_index, node.position, radius, refine.degree_mesh).degree;
  }

  for (const auto& node : set.nodes) set.total_charge += node.chirality;
  return set;
}

CancellationCheck check_cancellation(const NodeSet& nodes) {
  CancellationCheck check;
  for (const auto& node : nodes.nodes) {
    check.total_charge += node.chirality;
    if (!node.nondegenerate) ++check.degenerate_nodes;
  }
  check.balanced = check.total_charge == 0;
  return check;
}

}  // namespace weylscope
