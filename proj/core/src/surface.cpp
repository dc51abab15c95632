#include "weylscope/surface.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "weylscope/berry.hpp"
#include "weylscope/errors.hpp"
#include "weylscope/parallel.hpp"

namespace weylscope {

namespace {

using cd = std::complex<double>;

int clamped_layers(const SlabConfig& config) {
  return std::max(1, std::min(config.surface_layers, config.depth / 2));
}

int perpendicular_range(const TightBindingModel& model, int normal_axis) {
  int range = 0;
  for (const auto& [r, amplitude] : model.terms()) {
    range = std::max(range, std::abs(r[normal_axis - 1]));
  }
  return range;
}

std::string format_intervals(const std::vector<BandInterval>& bands) {
  std::ostringstream os;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    if (b) os << ", ";
    os << "[" << bands[b].lower << ", " << bands[b].upper << "]";
  }
  return os.str();
}

}  // namespace

void validate_geometry(const SlabConfig& config) {
  if (config.normal_axis < 1 || config.normal_axis > 3) {
    throw UsageError("bad_axis",
                     "normal axis must be 1, 2 or 3, got " + std::to_string(config.normal_axis));
  }
  if (config.surface_layers < 1) {
    throw UsageError("bad_surface_layers", "surface layer count must be positive");
  }
  if (config.depth < 1) throw UsageError("bad_depth", "slab depth must be positive");
}

void validate(const SlabConfig& config, const TightBindingModel& model) {
  validate_geometry(config);
  const int minimum = 2 * model.range() + 2;
  if (config.depth < minimum) {
    std::ostringstream os;
    os << "slab depth " << config.depth << " is below " << minimum << " for hopping range "
       << model.range();
    throw UsageError("bad_depth", os.str());
  }
}

std::array<int, 2> parallel_axes(int normal_axis) {
  switch (normal_axis) {
    case 1: return {1, 2};
    case 2: return {2, 0};
    case 3: return {0, 1};
    default:
      throw UsageError("bad_axis", "normal axis must be 1, 2 or 3, got " +
                                       std::to_string(normal_axis));
  }
}

double SurfaceMomentum::distance(const SurfaceMomentum& other) const {
  return std::hypot(circular_distance(a_, other.a_), circular_distance(b_, other.b_));
}

Quasimomentum SurfaceMomentum::bulk(int normal_axis, double perpendicular) const {
  const auto axes = parallel_axes(normal_axis);
  Vec3 k;
  k[normal_axis - 1] = perpendicular;
  k[axes[0]] = a_;
  k[axes[1]] = b_;
  return Quasimomentum(k);
}

BandedMatrix slab_hamiltonian(const TightBindingModel& model, const SlabConfig& config,
                              const SurfaceMomentum& k_par) {
  validate_geometry(config);
  const int m = model.bands();
  const int n_layers = config.depth;
  const int normal = config.normal_axis - 1;
  const auto axes = parallel_axes(config.normal_axis);

  // Blocks by perpendicular displacement.
  std::map<int, ComplexMatrix> blocks;
  for (const auto& [r, amplitude] : model.terms()) {
    const double phase = r[axes[0]] * k_par[0] + r[axes[1]] * k_par[1];
    auto [it, fresh] = blocks.try_emplace(r[normal], ComplexMatrix::Zero(m, m));
    it->second += std::polar(1.0, phase) * amplitude;
  }

  BandedMatrix slab;
  slab.dense = ComplexMatrix::Zero(static_cast<Eigen::Index>(n_layers) * m,
                                   static_cast<Eigen::Index>(n_layers) * m);
  slab.bandwidth = static_cast<Eigen::Index>(m) *
                   std::max(1, perpendicular_range(model, config.normal_axis));
  for (int n = 0; n < n_layers; ++n) {
    for (const auto& [shift, block] : blocks) {
      const int target = n + shift;
      if (target < 0 || target >= n_layers) continue;
      slab.dense.block(static_cast<Eigen::Index>(n) * m, static_cast<Eigen::Index>(target) * m,
                       m, m) += block;
    }
  }
  slab.dense = 0.5 * (slab.dense + slab.dense.adjoint()).eval();
  return slab;
}

std::vector<std::size_t> SlabSpectrum::on_side(Side side, double threshold) const {
  const auto& weights = side == Side::top ? top_weights : bottom_weights;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > threshold) out.push_back(i);
  }
  return out;
}

SlabSpectrum resolve_surfaces(const BandedMatrix& slab, const SpectralDecomposition& states,
                              const SlabConfig& config, int bands, const SurfaceMomentum& k_par,
                              bool keep_vectors, double cluster_tolerance) {
  const Eigen::Index rows = slab.rows();
  const Eigen::Index layer_rows = static_cast<Eigen::Index>(clamped_layers(config)) * bands;
  const Eigen::Index bottom_start = rows - layer_rows;

  ComplexMatrix vectors = states.eigenvectors;
  Eigen::VectorXd energies = states.eigenvalues;
  const Eigen::Index count = energies.size();

  auto weight = [&](Eigen::Index col, Eigen::Index start, Eigen::Index length) {
    return vectors.col(col).segment(start, length).squaredNorm();
  };
  auto surface_mass = [&](Eigen::Index col) {
    return weight(col, 0, layer_rows) + weight(col, bottom_start, layer_rows);
  };

  for (Eigen::Index first = 0; first < count;) {
    Eigen::Index last = first + 1;
    while (last < count && energies[last] - energies[last - 1] < cluster_tolerance) ++last;
    std::vector<Eigen::Index> members;
    for (Eigen::Index c = first; c < last; ++c) {
      if (surface_mass(c) > 0.5) members.push_back(c);
    }
    if (members.size() > 1) {
      const auto size = static_cast<Eigen::Index>(members.size());
      ComplexMatrix v(rows, size);
      for (Eigen::Index j = 0; j < size; ++j) v.col(j) = vectors.col(members[j]);
      // Top minus bottom projector inside the cluster.
      ComplexMatrix side = v.topRows(layer_rows).adjoint() * v.topRows(layer_rows) -
                           v.bottomRows(layer_rows).adjoint() * v.bottomRows(layer_rows);
      const SpectralDecomposition split = eigh(0.5 * (side + side.adjoint()));
      v = v * split.eigenvectors;
      for (Eigen::Index j = 0; j < size; ++j) {
        vectors.col(members[j]) = v.col(j);
        energies[members[j]] = (v.col(j).adjoint() * slab.dense * v.col(j))(0, 0).real();
      }
    }
    first = last;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return energies[a] < energies[b]; });

  SlabSpectrum out;
  out.k_par = k_par;
  if (keep_vectors) out.eigenvectors.resize(rows, count);
  for (std::size_t j = 0; j < order.size(); ++j) {
    const Eigen::Index c = order[j];
    const double top = weight(c, 0, layer_rows);
    const double bottom = weight(c, bottom_start, layer_rows);
    const double bulk = rows > 2 * layer_rows ? weight(c, layer_rows, rows - 2 * layer_rows) : 0.0;
    out.eigenvalues.push_back(energies[c]);
    out.top_weights.push_back(top);
    out.bottom_weights.push_back(bottom);
    out.bulk_weights.push_back(bulk);
    if (keep_vectors) out.eigenvectors.col(static_cast<Eigen::Index>(j)) = vectors.col(c);
  }
  return out;
}

SlabSpectrum full_slab_spectrum(const TightBindingModel& model, const SlabConfig& config,
                                const SurfaceMomentum& k_par, bool keep_vectors) {
  validate(config, model);
  const BandedMatrix slab = slab_hamiltonian(model, config, k_par);
  return resolve_surfaces(slab, eigh(slab.dense), config, model.bands(), k_par, keep_vectors);
}

std::vector<BandInterval> bulk_band_union(const TightBindingModel& model, int normal_axis,
                                          const SurfaceMomentum& k_par, int samples) {
  parallel_axes(normal_axis);
  if (samples < 2) throw UsageError("bad_samples", "bulk band sampling needs at least 2 samples");
  const int m = model.bands();
  std::vector<BandInterval> bands(static_cast<std::size_t>(m),
                                  {std::numeric_limits<double>::infinity(),
                                   -std::numeric_limits<double>::infinity()});
  for (int j = 0; j < samples; ++j) {
    const double perpendicular = -kPi + kTwoPi * j / samples;
    const Eigen::VectorXd lambda =
        eigvalsh(bloch_matrix(model, k_par.bulk(normal_axis, perpendicular)));
    for (int b = 0; b < m; ++b) {
      bands[b].lower = std::min(bands[b].lower, lambda[b]);
      bands[b].upper = std::max(bands[b].upper, lambda[b]);
    }
  }
  return bands;
}

double bulk_gap_distance(const TightBindingModel& model, int normal_axis,
                         const SurfaceMomentum& k_par, double energy, int samples) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& band : bulk_band_union(model, normal_axis, k_par, samples)) {
    if (energy >= band.lower && energy <= band.upper) return 0.0;
    best = std::min({best, std::abs(energy - band.lower), std::abs(energy - band.upper)});
  }
  return best;
}

SlabSpectrum surface_spectrum(const TightBindingModel& model, const SlabConfig& config,
                              const SurfaceMomentum& k_par, EnergyWindow window) {
  validate(config, model);
  const auto bands = bulk_band_union(model, config.normal_axis, k_par);
  for (const auto& band : bands) {
    if (band.upper > window.lower && band.lower < window.upper) {
      std::ostringstream os;
      os << "window (" << window.lower << ", " << window.upper << ") meets the bulk bands "
         << format_intervals(bands) << " at k_par = (" << k_par[0] << ", " << k_par[1] << ")";
      throw NumericalError("window_overlaps_bulk", os.str());
    }
  }
  const BandedMatrix slab = slab_hamiltonian(model, config, k_par);
  const SpectralDecomposition states = eigh_partial(slab, window, slab.rows());
  return resolve_surfaces(slab, states, config, model.bands(), k_par, false);
}

SurfaceLoop circle_loop(double center_a, double center_b, double radius, int vertices) {
  if (!(radius > 0.0) || vertices < 3) {
    throw UsageError("bad_loop", "circle loop needs a positive radius and at least 3 vertices");
  }
  SurfaceLoop loop;
  for (int j = 0; j <= vertices; ++j) {
    const double phi = kTwoPi * (j % vertices) / vertices;
    loop.vertices.push_back({center_a + radius * std::cos(phi), center_b + radius * std::sin(phi)});
  }
  return loop;
}

SurfaceLoop line_loop(int direction, double offset) {
  if (direction == 0) return {{{-kPi, offset}, {kPi, offset}}};
  if (direction == 1) return {{{offset, -kPi}, {offset, kPi}}};
  throw UsageError("bad_loop", "line loop direction must be 0 or 1");
}

SurfaceLoop reversed(const SurfaceLoop& loop) {
  return {{loop.vertices.rbegin(), loop.vertices.rend()}};
}

std::vector<ProjectedNode> project_nodes(const NodeSet& nodes, int normal_axis,
                                         double tolerance) {
  const auto axes = parallel_axes(normal_axis);
  std::vector<ProjectedNode> out;
  for (const auto& node : nodes.nodes) {
    const SurfaceMomentum k(node.position[axes[0]], node.position[axes[1]]);
    auto same = std::find_if(out.begin(), out.end(),
                             [&](const ProjectedNode& p) { return p.k_par.distance(k) < tolerance; });
    if (same == out.end()) {
      out.push_back({k, node.chirality});
    } else {
      same->charge += node.chirality;
    }
  }
  return out;
}

namespace {

class Polyline {
 public:
  explicit Polyline(const SurfaceLoop& loop) : vertices_(loop.vertices) {
    if (vertices_.size() < 2) throw UsageError("bad_loop", "loop needs at least two vertices");
    const auto& first = vertices_.front();
    const auto& last = vertices_.back();
    if (circular_distance(first[0], last[0]) > 1e-9 ||
        circular_distance(first[1], last[1]) > 1e-9) {
      throw UsageError("loop_not_closed", "loop must end where it starts (modulo 2 pi)");
    }
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
      cumulative_.push_back(cumulative_.back() + std::hypot(vertices_[i][0] - vertices_[i - 1][0],
                                                            vertices_[i][1] - vertices_[i - 1][1]));
    }
    if (!(cumulative_.back() > 0.0)) throw UsageError("bad_loop", "loop has zero length");
  }

  double length() const { return cumulative_.back(); }

  SurfaceMomentum at(double s) const {
    const double target = std::clamp(s, 0.0, 1.0) * length();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
    i = std::clamp<std::size_t>(i, 1, vertices_.size() - 1);
    const double span = cumulative_[i] - cumulative_[i - 1];
    const double f = span > 0.0 ? (target - cumulative_[i - 1]) / span : 0.0;
    return {vertices_[i - 1][0] + f * (vertices_[i][0] - vertices_[i - 1][0]),
            vertices_[i - 1][1] + f * (vertices_[i][1] - vertices_[i - 1][1])};
  }

 private:
  std::vector<std::array<double, 2>> vertices_;
  std::vector<double> cumulative_;
};

struct FlowSample {
  double s = 0.0;
  std::vector<double> top;
  std::vector<double> bottom;
};

// Nearest-eigenvalue matching of one side's branches between two samples.
// Returns false when the matching is ambiguous.
bool match_branches(const std::vector<double>& a, const std::vector<double>& b, double sa,
                    double sb, double energy, double half_width, Side side,
                    std::vector<Crossing>& out) {
  const double match_tol = 0.25 * half_width;
  const double edge = 0.5 * half_width;

  struct Pair {
    std::size_t i, j;
    double d;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = std::abs(a[i] - b[j]);
      if (d < match_tol) pairs.push_back({i, j, d});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.d < y.d; });
  std::vector<int> match_a(a.size(), -1), match_b(b.size(), -1);
  std::vector<Pair> accepted;
  for (const auto& p : pairs) {
    if (match_a[p.i] >= 0 || match_b[p.j] >= 0) continue;
    match_a[p.i] = static_cast<int>(p.j);
    match_b[p.j] = static_cast<int>(p.i);
    accepted.push_back(p);
  }
  for (const auto& p : accepted) {
    const double slack = 2.0 * p.d + 1e-12;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (j != p.j && std::abs(a[p.i] - b[j]) < slack) return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i != p.i && std::abs(a[i] - b[p.j]) < slack) return false;
    }
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (match_a[i] < 0 && std::abs(a[i] - energy) < edge) return false;
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (match_b[j] < 0 && std::abs(b[j] - energy) < edge) return false;
  }
  for (const auto& p : accepted) {
    const double ea = a[p.i] - energy;
    const double eb = b[p.j] - energy;
    if ((ea < 0.0) == (eb < 0.0)) continue;
    const double f = ea / (ea - eb);
    out.push_back({sa + f * (sb - sa), eb > ea ? 1 : -1, side});
  }
  return true;
}

}  // namespace

SpectralFlowResult spectral_flow(const TightBindingModel& model, const SlabConfig& config,
                                 const SurfaceLoop& loop, int steps,
                                 const SpectralFlowOptions& options) {
  validate(config, model);
  if (steps < 100) {
    throw UsageError("bad_steps", "spectral flow needs at least 100 steps, got " +
                                      std::to_string(steps));
  }
  if (!(options.exclusion_radius >= 0.0)) {
    throw UsageError("bad_exclusion_radius", "exclusion radius must be non-negative");
  }
  const Polyline path(loop);

  SpectralFlowResult result;
  for (int j = 0; j < steps; ++j) result.loop.push_back(path.at(static_cast<double>(j) / steps));

  std::vector<SurfaceMomentum> projected;
  if (options.projected_nodes) {
    projected = *options.projected_nodes;
  } else {
    const int band = options.band_index > 0 ? options.band_index : model.bands() / 2;
    if (band >= 1 && band < model.bands()) {
      for (const auto& p : project_nodes(find_nodes(model, band), config.normal_axis)) {
        projected.push_back(p.k_par);
      }
    }
  }
  for (std::size_t j = 0; j < result.loop.size(); ++j) {
    for (const auto& node : projected) {
      const double d = result.loop[j].distance(node);
      if (d < options.exclusion_radius) {
        std::ostringstream os;
        os << "loop passes within " << d << " of the projected node (" << node[0] << ", "
           << node[1] << "); exclusion radius is " << options.exclusion_radius;
        throw NumericalError("loop_near_node", os.str());
      }
    }
  }

  const double energy = options.energy;
  double half_width = options.window_half_width;
  if (!(half_width > 0.0)) {
    std::vector<double> distance(result.loop.size());
    parallel_for(result.loop.size(), [&](std::size_t j) {
      distance[j] = bulk_gap_distance(model, config.normal_axis, result.loop[j], energy);
    });
    half_width = 0.5 * *std::min_element(distance.begin(), distance.end());
  }
  if (!(half_width > 1e-4)) {
    std::ostringstream os;
    os << "bulk bands come within " << 2.0 * half_width << " of energy " << energy
       << " along the loop";
    throw NumericalError("gap_too_small", os.str());
  }
  result.window_half_width = half_width;
  const EnergyWindow window{energy - half_width, energy + half_width};

  auto sample = [&](double s, const SurfaceMomentum& k) {
    const BandedMatrix slab = slab_hamiltonian(model, config, k);
    const SpectralDecomposition states = eigh_partial(slab, window, slab.rows());
    const SlabSpectrum spectrum = resolve_surfaces(slab, states, config, model.bands(), k, false,
                                                   options.cluster_tolerance);
    FlowSample out;
    out.s = s;
    // In-gap states are split by the side carrying more weight.
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      auto& side = spectrum.top_weights[i] >= spectrum.bottom_weights[i] ? out.top : out.bottom;
      side.push_back(spectrum.eigenvalues[i]);
    }
    return out;
  };

  std::vector<FlowSample> samples(result.loop.size());
  parallel_for(samples.size(), [&](std::size_t j) {
    samples[j] = sample(static_cast<double>(j) / steps, result.loop[j]);
  });

  int refinements = 0;
  std::function<bool(const FlowSample&, const FlowSample&, int, std::vector<Crossing>&)> resolve =
      [&](const FlowSample& a, const FlowSample& b, int depth, std::vector<Crossing>& out) {
        std::vector<Crossing> found;
        if (match_branches(a.top, b.top, a.s, b.s, energy, half_width, Side::top, found) &&
            match_branches(a.bottom, b.bottom, a.s, b.s, energy, half_width, Side::bottom,
                           found)) {
          out.insert(out.end(), found.begin(), found.end());
          return true;
        }
        if (depth >= options.max_refinements) return false;
        ++refinements;
        const double s = 0.5 * (a.s + b.s);
        const FlowSample mid = sample(s, path.at(s));
        return resolve(a, mid, depth + 1, out) && resolve(mid, b, depth + 1, out);
      };

  for (std::size_t j = 0; j < samples.size(); ++j) {
    FlowSample next = j + 1 < samples.size() ? samples[j + 1] : samples.front();
    if (j + 1 == samples.size()) next.s = 1.0;
    if (!resolve(samples[j], next, 0, result.crossings)) {
      std::ostringstream os;
      os << "surface branches cannot be matched between loop parameters " << samples[j].s
         << " and " << next.s << " after " << options.max_refinements << " refinements";
      throw NumericalError("branch_ambiguity", os.str());
    }
  }
  std::stable_sort(result.crossings.begin(), result.crossings.end(),
                   [](const Crossing& x, const Crossing& y) { return x.parameter < y.parameter; });
  for (const auto& c : result.crossings) {
    (c.side == Side::top ? result.flow : result.bottom_flow) += c.direction;
  }
  result.refinements = refinements;
  return result;
}

int loop_torus_chern(const TightBindingModel& model, int normal_axis, const SurfaceLoop& loop,
                     int rank, int perpendicular_samples, int loop_samples) {
  parallel_axes(normal_axis);
  if (perpendicular_samples < 4 || loop_samples < 4) {
    throw UsageError("bad_grid", "loop torus needs at least 4 samples per direction");
  }
  const Polyline path(loop);
  const MatrixField field = as_matrix_field(model);
  FrameGrid grid;
  grid.rows = perpendicular_samples;
  grid.cols = loop_samples;
  grid.frames.resize(static_cast<std::size_t>(grid.rows) * grid.cols);
  parallel_for(static_cast<std::size_t>(grid.cols), [&](std::size_t j) {
    const SurfaceMomentum k = path.at(static_cast<double>(j) / grid.cols);
    for (int i = 0; i < grid.rows; ++i) {
      const double perpendicular = -kPi + kTwoPi * i / grid.rows;
      grid.frames[static_cast<std::size_t>(i) * grid.cols + j] =
          occupied_frame(field, k.bulk(normal_axis, perpendicular).angles(), rank, 1e-6);
    }
  });
  const LatticeFlux flux = lattice_flux(grid);
  if (flux.max_plaquette_phase > kPi / 2.0) {
    throw NumericalError("plaquette_phase_near_pi",
                         "loop torus lattice too coarse; increase the sample counts");
  }
  return flux.chern;
}

std::vector<ArcPoint> FermiArc::on_side(Side side) const {
  std::vector<ArcPoint> out;
  std::copy_if(points.begin(), points.end(), std::back_inserter(out),
               [&](const ArcPoint& p) { return p.side == side; });
  return out;
}

FermiArc fermi_arc(const TightBindingModel& model, const SlabConfig& config, int grid,
                   double energy, double tolerance) {
  validate(config, model);
  if (grid < 2) throw UsageError("bad_grid", "Fermi-arc grid must be at least 2");
  if (!(tolerance > 0.0)) throw UsageError("bad_tolerance", "arc tolerance must be positive");

  const EnergyWindow window{energy - tolerance, energy + tolerance};
  std::vector<std::vector<ArcPoint>> rows(static_cast<std::size_t>(grid));
  parallel_for(rows.size(), [&](std::size_t i) {
    for (int j = 0; j < grid; ++j) {
      const SurfaceMomentum k(-kPi + kTwoPi * static_cast<double>(i) / grid,
                              -kPi + kTwoPi * j / grid);
      const BandedMatrix slab = slab_hamiltonian(model, config, k);
      const SpectralDecomposition states = eigh_partial(slab, window, slab.rows());
      if (states.size() == 0) continue;
      const SlabSpectrum spectrum =
          resolve_surfaces(slab, states, config, model.bands(), k, false, tolerance);
      for (std::size_t s = 0; s < spectrum.size(); ++s) {
        const double e = spectrum.eigenvalues[s];
        if (!(std::abs(e - energy) < tolerance)) continue;
        const std::array<int, 2> cell{static_cast<int>(i), j};
        if (spectrum.top_weights[s] > 0.5) {
          rows[i].push_back({k, cell, Side::top, e, spectrum.top_weights[s]});
        } else if (spectrum.bottom_weights[s] > 0.5) {
          rows[i].push_back({k, cell, Side::bottom, e, spectrum.bottom_weights[s]});
        }
      }
    }
  });

  FermiArc arc;
  arc.energy = energy;
  arc.grid = grid;
  for (auto& row : rows) arc.points.insert(arc.points.end(), row.begin(), row.end());
  return arc;
}

std::vector<std::vector<std::size_t>> arc_components(const FermiArc& arc, Side side) {
  const int g = arc.grid;
  std::map<std::array<int, 2>, std::vector<std::size_t>> by_cell;
  for (std::size_t p = 0; p < arc.points.size(); ++p) {
    if (arc.points[p].side == side) by_cell[arc.points[p].cell].push_back(p);
  }
  std::map<std::array<int, 2>, bool> seen;
  std::vector<std::vector<std::size_t>> components;
  for (const auto& [start, members] : by_cell) {
    if (seen[start]) continue;
    std::vector<std::size_t> component;
    std::vector<std::array<int, 2>> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const auto cell = stack.back();
      stack.pop_back();
      const auto& here = by_cell.at(cell);
      component.insert(component.end(), here.begin(), here.end());
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const std::array<int, 2> next{((cell[0] + di) % g + g) % g, ((cell[1] + dj) % g + g) % g};
          if (by_cell.count(next) && !seen[next]) {
            seen[next] = true;
            stack.push_back(next);
          }
        }
      }
    }
    std::sort(component.begin(), component.end());
    components.push_back(std::move(component));
  }
  return components;
}

std::vector<double> arc_endpoint_distances(const FermiArc& arc, Side side,
                                           const std::vector<SurfaceMomentum>& targets) {
  std::vector<double> out;
  for (const auto& target : targets) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : arc.points) {
      if (p.side == side) best = std::min(best, p.k_par.distance(target));
    }
    out.push_back(best);
  }
  return out;
}

bool arc_connects(const FermiArc& arc, Side side, const SurfaceMomentum& a,
                  const SurfaceMomentum& b, double radius) {
  for (const auto& component : arc_components(arc, side)) {
    bool near_a = false;
    bool near_b = false;
    for (std::size_t p : component) {
      near_a = near_a || arc.points[p].k_par.distance(a) < radius;
      near_b = near_b || arc.points[p].k_par.distance(b) < radius;
    }
    if (near_a && near_b) return true;
  }
  return false;
}

}  // namespace weylscope
