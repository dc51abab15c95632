#include "weylscope/berry.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>

#include "weylscope/eig.hpp"
#include "weylscope/errors.hpp"
#include "weylscope/parallel.hpp"

namespace weylscope {

namespace {

using cd = std::complex<double>;

constexpr double kSliceMinGap = 1e-6;
constexpr double kSphereMinGap = 1e-10;
constexpr double kCoarsePhase = kPi / 2.0;

void require_axis(int axis) {
  if (axis < 1 || axis > 3) {
    throw UsageError("bad_axis", "axis must be 1, 2 or 3, got " + std::to_string(axis));
  }
}

void require_rank(int rank, Eigen::Index bands) {
  if (rank < 1 || rank >= bands) {
    std::ostringstream os;
    os << "occupied rank " << rank << " outside [1, " << bands << ")";
    throw UsageError("bad_rank", os.str());
  }
}

cd link(const ComplexMatrix& from, const ComplexMatrix& to) {
  if (from.cols() == 1) return from.col(0).dot(to.col(0));
  return (from.adjoint() * to).determinant();
}

// Product of links around a -> b -> c -> d -> a.
double plaquette_phase(const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& c,
                       const ComplexMatrix& d) {
  return std::arg(link(a, b) * link(b, c) * link(c, d) * link(d, a));
}

}  // namespace

ComplexMatrix occupied_frame(const MatrixField& field, const Vec3& k, int rank, double min_gap) {
  const ComplexMatrix h = field(k);
  require_rank(rank, h.rows());
  const SpectralDecomposition s = h.rows() == 2 ? eigh2(h) : eigh(h);
  const double gap = s.eigenvalues[rank] - s.eigenvalues[rank - 1];
  if (!(gap > min_gap)) {
    std::ostringstream os;
    os << "gap above band " << rank << " is " << gap << " at (" << k[0] << ", " << k[1] << ", "
       << k[2] << ")";
    throw NumericalError("gap_closed", os.str());
  }
  return s.eigenvectors.leftCols(rank);
}

BandProjector band_projector(const TightBindingModel& model, const Quasimomentum& k, int rank) {
  const ComplexMatrix frame = occupied_frame(as_matrix_field(model), k.angles(), rank, 1e-10);
  return {k, frame * frame.adjoint(), rank};
}

LatticeFlux lattice_flux(const FrameGrid& grid) {
  double total = 0.0;
  double worst = 0.0;
  for (int i = 0; i < grid.rows; ++i) {
    for (int j = 0; j < grid.cols; ++j) {
      const double phase = plaquette_phase(grid.at(i, j), grid.at(i + 1, j),
                                           grid.at(i + 1, j + 1), grid.at(i, j + 1));
      total += phase;
      worst = std::max(worst, std::abs(phase));
    }
  }
  LatticeFlux flux;
  flux.value = -total / kTwoPi;
  flux.chern = static_cast<int>(std::lround(flux.value));
  flux.max_plaquette_phase = worst;
  return flux;
}

std::array<int, 2> slice_axes(int axis) {
  require_axis(axis);
  switch (axis) {
    case 1: return {1, 2};
    case 2: return {2, 0};
    default: return {0, 1};
  }
}

FrameGrid slice_frames(const MatrixField& field, int rank, int axis, double angle, int grid) {
  const auto [a, b] = slice_axes(axis);
  if (grid < 4) throw UsageError("bad_grid", "slice grid must be at least 4");
  FrameGrid out;
  out.rows = grid;
  out.cols = grid;
  out.frames.resize(static_cast<std::size_t>(grid) * grid);
  const double spacing = kTwoPi / grid;
  parallel_for(static_cast<std::size_t>(grid), [&](std::size_t i) {
    for (int j = 0; j < grid; ++j) {
      Vec3 k;
      k[axis - 1] = angle;
      k[a] = -kPi + spacing * static_cast<double>(i);
      k[b] = -kPi + spacing * j;
      out.frames[i * grid + j] = occupied_frame(field, k, rank, kSliceMinGap);
    }
  });
  return out;
}

int chern_number_slice(const MatrixField& field, int rank, int axis, double angle, int grid) {
  int current = grid;
  for (int attempt = 0; attempt < 3; ++attempt, current *= 2) {
    FrameGrid frames;
    try {
      frames = slice_frames(field, rank, axis, angle, current);
    } catch (const NumericalError& e) {
      if (e.code() != "gap_closed") throw;
      std::ostringstream os;
      os << "slice theta_" << axis << " = " << angle << " passes through a node: " << e.what();
      throw NumericalError("node_on_slice", os.str());
    }
    const LatticeFlux flux = lattice_flux(frames);
    if (flux.max_plaquette_phase <= kCoarsePhase) return flux.chern;
  }
  std::ostringstream os;
  os << "plaquette phases stay near pi on slice theta_" << axis << " = " << angle
     << " up to grid " << current / 2;
  throw NumericalError("plaquette_phase_near_pi", os.str());
}

int chern_number_slice(const TightBindingModel& model, int rank, int axis, double angle,
                       int grid) {
  return chern_number_slice(as_matrix_field(model), rank, axis, angle, grid);
}

int berry_flux_sphere(const MatrixField& field, int rank, const Vec3& center, double radius,
                      int mesh) {
  if (mesh < 4) throw UsageError("bad_mesh", "sphere mesh must be at least 4");
  if (!(radius > 0.0)) throw UsageError("bad_radius", "sphere radius must be positive");

  const double d_polar = kPi / mesh;
  const double d_azimuth = kTwoPi / mesh;
  auto frame_at = [&](double polar, double azimuth) {
    const Vec3 k = center + radius * Vec3(std::sin(polar) * std::cos(azimuth),
                                          std::sin(polar) * std::sin(azimuth), std::cos(polar));
    try {
      return occupied_frame(field, k, rank, kSphereMinGap);
    } catch (const NumericalError& e) {
      if (e.code() != "gap_closed") throw;
      throw NumericalError("gap_closes_on_sphere",
                           std::string("Berry-flux sphere touches a band crossing: ") + e.what());
    }
  };

  // Rows 0 and mesh are the poles; one frame each so pole links are trivial.
  const auto n = static_cast<std::size_t>(mesh);
  std::vector<ComplexMatrix> frames((n + 1) * n);
  const ComplexMatrix north = frame_at(0.0, 0.0);
  const ComplexMatrix south = frame_at(kPi, 0.0);
  parallel_for(n + 1, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == 0) {
        frames[j] = north;
      } else if (i == n) {
        frames[i * n + j] = south;
      } else {
        frames[i * n + j] = frame_at(d_polar * i, d_azimuth * j);
      }
    }
  });

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jn = (j + 1) % n;
      total += plaquette_phase(frames[i * n + j], frames[(i + 1) * n + j],
                               frames[(i + 1) * n + jn], frames[i * n + jn]);
    }
  }
  const double value = -total / kTwoPi;
  const long rounded = std::lround(value);
  if (std::abs(value - static_cast<double>(rounded)) > 1e-6) {
    std::ostringstream os;
    os << "plaquette sum over the sphere is " << value << ", not an integer";
    throw NumericalError("flux_not_integer", os.str());
  }
  return static_cast<int>(rounded);
}

std::vector<std::pair<double, int>> node_projections(const NodeSet& nodes, int axis,
                                                     double tolerance) {
  require_axis(axis);
  std::vector<std::pair<double, int>> out;
  for (const auto& node : nodes.nodes) {
    const double angle = node.position[axis - 1];
    auto same = std::find_if(out.begin(), out.end(), [&](const auto& p) {
      return circular_distance(p.first, angle) < tolerance;
    });
    if (same == out.end()) {
      out.emplace_back(angle, node.chirality);
    } else {
      same->second += node.chirality;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

double clearance(double angle, const std::vector<std::pair<double, int>>& projections) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : projections) best = std::min(best, circular_distance(angle, p.first));
  return best;
}

// Forward distance from a to b going in the +angle direction, in [0, 2 pi).
double forward(double a, double b) {
  const double d = reduce_angle(b - a);
  return d < 0.0 ? d + kTwoPi : d;
}

// Chirality sum of projections strictly inside the forward arc (from, to).
int charge_between(double from, double to, const std::vector<std::pair<double, int>>& proj) {
  const double span = forward(from, to);
  int charge = 0;
  for (const auto& p : proj) {
    const double d = forward(from, p.first);
    if (d > 0.0 && d < span) charge += p.second;
  }
  return charge;
}

void check_jump_rule(const ChernProfile& profile) {
  std::vector<std::pair<double, int>> proj;
  for (std::size_t i = 0; i < profile.node_projections.size(); ++i) {
    proj.emplace_back(profile.node_projections[i], profile.projection_charges[i]);
  }
  const std::size_t n = profile.slice_angles.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t next = (i + 1) % n;
    const int jump = profile.chern[next] - profile.chern[i];
    const int expected = charge_between(profile.slice_angles[i], profile.slice_angles[next], proj);
    if (n > 1 && jump != expected) {
      std::ostringstream os;
      os << "slice Chern number changes by " << jump << " between theta_" << profile.axis << " = "
         << profile.slice_angles[i] << " and " << profile.slice_angles[next]
         << " but the enclosed chirality is " << expected;
      throw NumericalError("inconsistent_profile", os.str());
    }
  }
}

}  // namespace

ChernProfile chern_profile(const TightBindingModel& model, int rank, int axis, int slices,
                           int grid, const NodeSet& nodes) {
  require_axis(axis);
  if (slices < 2) throw UsageError("bad_slices", "chern profile needs at least 2 slices");

  const auto proj = node_projections(nodes, axis);
  const double spacing = kTwoPi / slices;
  const double required = 0.5 * spacing - 1e-9;

  ChernProfile profile;
  profile.axis = axis;
  for (const auto& [angle, charge] : proj) {
    profile.node_projections.push_back(angle);
    profile.projection_charges.push_back(charge);
  }

  std::vector<double> angles;
  for (int j = 0; j < slices; ++j) {
    const double mid = -kPi + (j + 0.5) * spacing;
    double chosen = mid;
    if (clearance(mid, proj) < required) {
      std::vector<double> options{mid - 0.5 * spacing, mid + 0.5 * spacing};
      for (std::size_t p = 0; p < proj.size(); ++p) {
        const double from = proj[p].first;
        const double to = proj[(p + 1) % proj.size()].first;
        const double between = from + 0.5 * forward(from, to);
        if (circular_distance(between, mid) <= 0.5 * spacing) options.push_back(between);
      }
      double best = -1.0;
      for (double o : options) {
        const double c = clearance(o, proj);
        if (c > best) {
          best = c;
          chosen = o;
        }
      }
      if (best < required) {
        std::ostringstream os;
        os << "no slice in cell around theta_" << axis << " = " << mid
           << " keeps half a spacing from the node projections; use fewer slices";
        throw NumericalError("slices_too_coarse", os.str());
      }
    }
    angles.push_back(reduce_angle(chosen));
  }
  std::sort(angles.begin(), angles.end());
  angles.erase(std::unique(angles.begin(), angles.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-12; }),
               angles.end());

  const MatrixField field = as_matrix_field(model);
  for (double angle : angles) {
    profile.slice_angles.push_back(angle);
    profile.chern.push_back(chern_number_slice(field, rank, axis, angle, grid));
  }
  check_jump_rule(profile);
  return profile;
}

DiracString dirac_string(const ChernProfile& profile, const NodeSet& nodes) {
  const auto proj = node_projections(nodes, profile.axis);
  bool matches = proj.size() == profile.node_projections.size();
  for (std::size_t i = 0; matches && i < proj.size(); ++i) {
    matches = circular_distance(proj[i].first, profile.node_projections[i]) < 1e-6 &&
              proj[i].second == profile.projection_charges[i];
  }
  if (!matches) {
    throw NumericalError("inconsistent_profile",
                         "profile node projections do not match the node set");
  }
  check_jump_rule(profile);

  DiracString string;
  string.axis = profile.axis;
  if (profile.chern.empty()) return string;

  if (proj.empty()) {
    const int value = profile.chern.front();
    if (value != 0) string.segments.push_back({-kPi, kPi, value, true});
    return string;
  }

  // Value on each arc (proj[p], proj[p+1]); arcs without slices inherit from
  // their predecessor through the jump rule.
  const std::size_t arcs = proj.size();
  std::vector<std::optional<int>> value(arcs);
  for (std::size_t s = 0; s < profile.slice_angles.size(); ++s) {
    for (std::size_t p = 0; p < arcs; ++p) {
      const double from = proj[p].first;
      const double to = proj[(p + 1) % arcs].first;
      const double span = arcs == 1 ? kTwoPi : forward(from, to);
      const double d = forward(from, profile.slice_angles[s]);
      if (d > 0.0 && d < span) value[p] = profile.chern[s];
    }
  }
  const auto seeded = std::find_if(value.begin(), value.end(), [](const auto& v) { return v.has_value(); });
  if (seeded == value.end()) {
    throw NumericalError("inconsistent_profile", "no slice lies between node projections");
  }
  const std::size_t seed = static_cast<std::size_t>(seeded - value.begin());
  for (std::size_t step = 1; step < arcs; ++step) {
    const std::size_t p = (seed + step) % arcs;
    const std::size_t prev = (p + arcs - 1) % arcs;
    if (!value[p]) value[p] = *value[prev] + proj[p].second;
  }

  const bool uniform = std::all_of(value.begin(), value.end(), [&](const auto& v) { return *v == *value[0]; });
  if (uniform) {
    if (*value[0] != 0) string.segments.push_back({-kPi, kPi, *value[0], true});
    return string;
  }

  // Start from an arc whose predecessor differs so runs do not wrap the loop.
  std::size_t first = 0;
  while (*value[(first + arcs - 1) % arcs] == *value[first]) ++first;
  for (std::size_t step = 0; step < arcs;) {
    const std::size_t p = (first + step) % arcs;
    std::size_t length = 1;
    while (length < arcs && *value[(p + length) % arcs] == *value[p]) ++length;
    if (*value[p] != 0) {
      string.segments.push_back(
          {proj[p].first, proj[(p + length) % arcs].first, *value[p], false});
    }
    step += length;
  }
  std::sort(string.segments.begin(), string.segments.end(),
            [](const StringSegment& x, const StringSegment& y) { return x.start_angle < y.start_angle; });
  return string;
}

}  // namespace weylscope
