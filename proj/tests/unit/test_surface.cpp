#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "weylscope/berry.hpp"
#include "weylscope/errors.hpp"
#include "weylscope/surface.hpp"

using namespace weylscope;

namespace {

TightBindingModel sigma3_model() {
  const std::vector<HoppingTerm> terms{{{{0, 0, 0}}, pauli_matrices()[2]}};
  return build_model(2, terms);
}

SlabConfig slab(int depth, int axis = 1) {
  SlabConfig config;
  config.normal_axis = axis;
  config.depth = depth;
  return config;
}

SurfaceLoop polygon(std::vector<std::array<double, 2>> corners) {
  corners.push_back(corners.front());
  return SurfaceLoop{corners};
}

const double kGridStep = kTwoPi / 64;

}  // namespace

TEST_CASE("atomic slab is block diagonal with eigenvalues +-1") {
  for (int depth : {1, 5, 12}) {
    const BandedMatrix h = slab_hamiltonian(sigma3_model(), slab(depth), SurfaceMomentum(0.3, -1.0));
    CHECK(h.dense.rows() == 2 * depth);
    ComplexMatrix diag = ComplexMatrix::Zero(2 * depth, 2 * depth);
    for (int n = 0; n < depth; ++n) diag.block(2 * n, 2 * n, 2, 2) = pauli_matrices()[2];
    CHECK((h.dense - diag).norm() < 1e-14);
  }
  const auto spectrum = full_slab_spectrum(sigma3_model(), slab(6), SurfaceMomentum(1.0, 2.0));
  for (double e : spectrum.eigenvalues) CHECK(std::abs(std::abs(e) - 1.0) < 1e-12);
}

TEST_CASE("depth-2 slab matches hand-assembled blocks") {
  const double t = 0.3, a = 0.7, b = -1.1;  // theta_2, theta_3
  const BandedMatrix h = slab_hamiltonian(minimal_model(t), slab(2), SurfaceMomentum(a, b));
  const auto& s = pauli_matrices();
  const ComplexMatrix onsite = std::sin(a) * s[1] + (2.0 + t - std::cos(a) - std::cos(b)) * s[2];
  // sin(theta_1) s1 - cos(theta_1) s3 = T e^{i theta_1} + h.c.
  const std::complex<double> i(0.0, 1.0);
  const ComplexMatrix hop = (-0.5 * i) * s[0] - 0.5 * s[2];
  ComplexMatrix expected(4, 4);
  expected << onsite, hop, hop.adjoint(), onsite;
  CHECK((h.dense - expected).norm() < 1e-14);
  CHECK(h.bandwidth >= 2);
}

TEST_CASE("slab Hamiltonian is Hermitian and matches the Fourier oracle") {
  const auto model = two_pair_model(0.2);
  for (int axis = 1; axis <= 3; ++axis) {
    const SurfaceMomentum k(0.4, -2.2);
    const BandedMatrix h = slab_hamiltonian(model, slab(10, axis), k);
    CHECK((h.dense - h.dense.adjoint()).norm() < 1e-12);
    const auto axes = parallel_axes(axis);
    CHECK(axes[0] == axis % 3);
    CHECK((h.dense - oracle::fourier_slab(model, axis, k[0], k[1], 10)).norm() < 1e-12);
    // Block tridiagonal in bandwidth-sized blocks.
    for (Eigen::Index r = 0; r < h.dense.rows(); ++r)
      for (Eigen::Index c = 0; c < h.dense.cols(); ++c)
        if (std::abs(r - c) >= 2 * h.bandwidth) CHECK(std::abs(h.dense(r, c)) == 0.0);
  }
}

TEST_CASE("slab configuration is validated") {
  CHECK_THROWS_AS(slab_hamiltonian(minimal_model(0.0), slab(0), SurfaceMomentum()), UsageError);
  CHECK_THROWS_AS(slab_hamiltonian(minimal_model(0.0), slab(10, 4), SurfaceMomentum()), UsageError);
  CHECK_THROWS_AS(validate(slab(3), minimal_model(0.0)), UsageError);
  CHECK_NOTHROW(validate(slab(4), minimal_model(0.0)));
  CHECK_THROWS_AS(validate(slab(5), two_pair_model(0.0)), UsageError);
}

TEST_CASE("surface spectrum in the gap") {
  const auto model = minimal_model(0.0);
  const SlabSpectrum at_zero = surface_spectrum(model, slab(40), SurfaceMomentum(0, 0), {-0.3, 0.3});
  int surface_states = 0;
  for (std::size_t s = 0; s < at_zero.size(); ++s) {
    CHECK(std::abs(at_zero.top_weights[s] + at_zero.bottom_weights[s] + at_zero.bulk_weights[s] - 1.0) < 1e-9);
    if (std::abs(at_zero.eigenvalues[s]) < 0.05 &&
        std::max(at_zero.top_weights[s], at_zero.bottom_weights[s]) > 0.5)
      ++surface_states;
  }
  CHECK(surface_states >= 1);
  CHECK(at_zero.on_side(Side::top).size() == 1);
  CHECK(at_zero.on_side(Side::bottom).size() == 1);

  CHECK(surface_spectrum(model, slab(40), SurfaceMomentum(0, 2.5), {-0.2, 0.2}).size() == 0);
  CHECK(surface_spectrum(sigma3_model(), slab(10), SurfaceMomentum(0.1, 0.2), {-0.5, 0.5}).size() == 0);
  CHECK_THROWS_AS(surface_spectrum(model, slab(40), SurfaceMomentum(0, 0), {-1.5, 1.5}), NumericalError);
}

TEST_CASE("surface branches disperse oppositely on the two faces") {
  const auto spectrum = surface_spectrum(minimal_model(0.0), slab(40), SurfaceMomentum(0.5, 0.0), {-0.7, 0.7});
  const auto top = spectrum.on_side(Side::top);
  const auto bottom = spectrum.on_side(Side::bottom);
  REQUIRE(top.size() == 1);
  REQUIRE(bottom.size() == 1);
  CHECK(std::abs(std::abs(spectrum.eigenvalues[top[0]]) - std::sin(0.5)) < 1e-6);
  CHECK(std::abs(spectrum.eigenvalues[top[0]] + spectrum.eigenvalues[bottom[0]]) < 1e-6);
}

TEST_CASE("weights of every slab state sum to one") {
  const auto spectrum = full_slab_spectrum(two_pair_model(0.0), slab(12), SurfaceMomentum(0.2, 0.9));
  REQUIRE(spectrum.size() == 24);
  for (std::size_t s = 0; s < spectrum.size(); ++s)
    CHECK(std::abs(spectrum.top_weights[s] + spectrum.bottom_weights[s] + spectrum.bulk_weights[s] - 1.0) < 1e-9);
}

TEST_CASE("essential spectrum lies in the bulk band union") {
  const auto model = minimal_model(0.0);
  for (const SurfaceMomentum k : {SurfaceMomentum(0.3, 0.4), SurfaceMomentum(-1.0, 2.6)}) {
    const auto bands = bulk_band_union(model, 1, k);
    const auto spectrum = full_slab_spectrum(model, slab(120), k);
    int bulk_states = 0;
    for (std::size_t s = 0; s < spectrum.size(); ++s) {
      if (spectrum.top_weights[s] > 0.5 || spectrum.bottom_weights[s] > 0.5) continue;
      ++bulk_states;
      const double e = spectrum.eigenvalues[s];
      const bool inside = std::any_of(bands.begin(), bands.end(), [e](const BandInterval& b) {
        return e >= b.lower - 0.05 && e <= b.upper + 0.05;
      });
      CHECK(inside);
    }
    CHECK(bulk_states >= 230);
    // The union is filled: no gap wider than 0.1 inside a band.
    for (const auto& band : bands) {
      for (double e = band.lower; e <= band.upper; e += 0.02) {
        const auto nearest = std::min_element(spectrum.eigenvalues.begin(), spectrum.eigenvalues.end(),
                                              [e](double x, double y) { return std::abs(x - e) < std::abs(y - e); });
        CHECK(std::abs(*nearest - e) < 0.1);
      }
    }
  }
}

TEST_CASE("contractible loop away from projected nodes has no flow") {
  const auto model = minimal_model(0.0);
  const auto result = spectral_flow(model, slab(40), circle_loop(0.0, 0.0, 0.4), 200);
  CHECK(result.flow == 0);
  CHECK(result.bottom_flow == 0);
  CHECK(loop_torus_chern(model, 1, circle_loop(0.0, 0.0, 0.4), 1) == 0);
}

TEST_CASE("flow around each projected node equals the enclosing torus Chern number") {
  const auto model = minimal_model(0.0);
  for (double center : {kPi / 2, -kPi / 2}) {
    CAPTURE(center);
    const SurfaceLoop loop = circle_loop(0.0, center, 0.4);
    const auto result = spectral_flow(model, slab(40), loop, 200);
    const int chern = loop_torus_chern(model, 1, loop, 1);
    CHECK(std::abs(result.flow) == 1);
    CHECK(result.flow == chern);
    CHECK(result.bottom_flow == -result.flow);
    CHECK(result.flow == (center > 0 ? -1 : 1));

    CHECK(spectral_flow(model, slab(40), loop, 400).flow == result.flow);
    CHECK(spectral_flow(model, slab(80), loop, 200).flow == result.flow);
    const auto back = spectral_flow(model, slab(40), reversed(loop), 200);
    CHECK(back.flow == -result.flow);
    CHECK(loop_torus_chern(model, 1, reversed(loop), 1) == -chern);

    int sum = 0;
    for (const auto& c : result.crossings)
      if (c.side == Side::top) sum += c.direction;
    CHECK(sum == result.flow);
  }
}

TEST_CASE("flow along coordinate lines equals slice Chern numbers") {
  const auto model = minimal_model(0.0);
  for (double offset : {0.0, 1.0, 2.5, -2.0}) {
    CAPTURE(offset);
    const auto result = spectral_flow(model, slab(40), line_loop(0, offset), 200);
    CHECK(result.flow == chern_number_slice(model, 1, 3, offset, 24));
    CHECK(result.flow == loop_torus_chern(model, 1, line_loop(0, offset), 1));
  }
}

TEST_CASE("spectral flow is additive") {
  const auto model = minimal_model(0.0);
  const SurfaceLoop r1 = polygon({{0.6, 0.0}, {0.6, 2.2}, {-0.6, 2.2}, {-0.6, 0.0}});
  const SurfaceLoop r2 = polygon({{0.6, 0.0}, {-0.6, 0.0}, {-0.6, -2.2}, {0.6, -2.2}});
  const SurfaceLoop both = polygon({{0.6, -2.2}, {0.6, 2.2}, {-0.6, 2.2}, {-0.6, -2.2}});
  SurfaceLoop joined = r1;
  joined.vertices.insert(joined.vertices.end(), r2.vertices.begin() + 1, r2.vertices.end());

  const int f1 = spectral_flow(model, slab(40), r1, 200).flow;
  const int f2 = spectral_flow(model, slab(40), r2, 200).flow;
  CHECK(f1 == -1);
  CHECK(f2 == 1);
  CHECK(spectral_flow(model, slab(40), joined, 400).flow == f1 + f2);
  CHECK(spectral_flow(model, slab(40), both, 200).flow == f1 + f2);
}

TEST_CASE("spectral flow rejects bad loops") {
  const auto model = minimal_model(0.0);
  CHECK_THROWS_AS(spectral_flow(model, slab(40), circle_loop(0.0, kPi / 2, 0.4), 50), UsageError);
  SurfaceLoop open = circle_loop(0.0, 0.0, 0.4);
  open.vertices.pop_back();
  CHECK_THROWS_AS(spectral_flow(model, slab(40), open, 200), UsageError);
  // Passes straight over the projected node.
  CHECK_THROWS_AS(spectral_flow(model, slab(40), circle_loop(0.0, kPi / 2 - 0.3, 0.3), 200), NumericalError);
  CHECK_THROWS_AS(spectral_flow(model, slab(40), circle_loop(0.1, kPi / 2, 0.1), 200), NumericalError);
}

TEST_CASE("node projections onto the surface") {
  const auto projected = project_nodes(find_nodes(minimal_model(0.0), 1), 1);
  REQUIRE(projected.size() == 2);
  for (const auto& p : projected) {
    CHECK(std::abs(p.k_par[0]) < 1e-6);
    CHECK(std::abs(std::abs(p.k_par[1]) - kPi / 2) < 1e-6);
    CHECK(p.charge == (p.k_par[1] > 0 ? 1 : -1));
  }
  // Along axis 3 both nodes land on the same point and cancel.
  const auto stacked = project_nodes(find_nodes(minimal_model(0.0), 1), 3);
  REQUIRE(stacked.size() == 1);
  CHECK(stacked[0].charge == 0);
}

TEST_CASE("Fermi arc of the minimal model") {
  const auto model = minimal_model(0.0);
  const std::vector<SurfaceMomentum> ends{SurfaceMomentum(0, -kPi / 2), SurfaceMomentum(0, kPi / 2)};
  std::vector<double> previous;
  for (int depth : {20, 40, 80}) {
    CAPTURE(depth);
    const FermiArc arc = fermi_arc(model, slab(depth), 64);
    const auto top = arc.on_side(Side::top);
    REQUIRE_FALSE(top.empty());
    CHECK_FALSE(arc.on_side(Side::bottom).empty());
    for (const auto& p : arc.points) {
      CHECK(std::abs(p.energy) < 0.05);
      CHECK(p.weight > 0.5);
      CHECK(std::abs(p.k_par[1]) < kPi / 2);
    }
    const auto distances = arc_endpoint_distances(arc, Side::top, ends);
    for (double d : distances) CHECK(d < 2 * kGridStep);
    if (!previous.empty())
      for (std::size_t i = 0; i < distances.size(); ++i) CHECK(distances[i] <= previous[i] + 1e-12);
    previous = distances;
    CHECK(arc_connects(arc, Side::top, ends[0], ends[1], 2 * kGridStep));
    CHECK(arc_connects(arc, Side::bottom, ends[0], ends[1], 2 * kGridStep));
    CHECK(arc_components(arc, Side::top).size() == 1);
  }
  // The nodes sit on grid points, which carry no surface state; the arc ends
  // on the neighbouring grid point, exactly one step away.
  for (double d : previous) CHECK(d <= kGridStep * (1.0 + 1e-12));
  CHECK(fermi_arc(sigma3_model(), slab(10), 16).points.empty());
  CHECK(fermi_arc(minimal_model(2.0), slab(20), 16).points.empty());
}

TEST_CASE("Fermi arc shortens with the node separation") {
  const double t = 0.9, node = std::acos(t);
  const auto model = minimal_model(t);
  const std::vector<SurfaceMomentum> ends{SurfaceMomentum(0, -node), SurfaceMomentum(0, node)};
  const std::size_t long_arc = fermi_arc(minimal_model(0.0), slab(40), 64).on_side(Side::top).size();

  // Four surface layers catch only the well-localized middle of the arc.
  const FermiArc narrow = fermi_arc(model, slab(40), 64);
  const auto top = narrow.on_side(Side::top);
  REQUIRE_FALSE(top.empty());
  CHECK(top.size() < long_arc);
  for (const auto& p : top) CHECK(std::abs(p.k_par[1]) < node);

  // With a surface window matched to the decay length the arc reaches the
  // nodes to grid resolution.
  SlabConfig wide = slab(80);
  wide.surface_layers = 16;
  const FermiArc full = fermi_arc(model, wide, 64);
  for (double d : arc_endpoint_distances(full, Side::top, ends)) CHECK(d < kGridStep);
  CHECK(arc_connects(full, Side::top, ends[0], ends[1], kGridStep));
  for (const auto& p : full.on_side(Side::top)) CHECK(std::abs(p.k_par[1]) < node);
}
