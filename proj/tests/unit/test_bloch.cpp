#include <doctest.h>

#include <random>

#include "weylscope/bloch.hpp"
#include "weylscope/eig.hpp"
#include "weylscope/errors.hpp"

using namespace weylscope;
using cd = std::complex<double>;

namespace {

double max_abs(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

ComplexMatrix mat2(cd a, cd b, cd c, cd d) {
  ComplexMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vec3 minimal_h(double t, const Vec3& k) {
  return {std::sin(k[0]), std::sin(k[1]), 2.0 + t - std::cos(k[0]) - std::cos(k[1]) - std::cos(k[2])};
}

}  // namespace

TEST_CASE("angles reduce into [-pi, pi)") {
  CHECK(reduce_angle(kPi) == doctest::Approx(-kPi));
  CHECK(reduce_angle(-kPi) == doctest::Approx(-kPi));
  CHECK(reduce_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(reduce_angle(0.25) == 0.25);
  for (double x : {-100.0, -7.0, -3.2, 3.1, 6.3, 50.0}) {
    const double r = reduce_angle(x);
    CHECK(r >= -kPi);
    CHECK(r < kPi);
    CHECK(std::abs(std::remainder(r - x, kTwoPi)) < 1e-12);
  }
  CHECK(circular_distance(-kPi + 0.1, kPi - 0.1) == doctest::Approx(0.2));
}

TEST_CASE("quasimomentum equality is modulo 2 pi") {
  const Quasimomentum a(0.5, kPi, -1.0);
  const Quasimomentum b(0.5 + kTwoPi, -kPi, -1.0 - 2 * kTwoPi);
  CHECK(a.approx_equal(b));
  CHECK(a[1] == doctest::Approx(-kPi));
  CHECK(a.distance(b) < 1e-12);
  CHECK_FALSE(a.approx_equal(Quasimomentum(0.5, 0.0, -1.0)));
}

TEST_CASE("scalar constant model") {
  const std::vector<HoppingTerm> terms{{{{0, 0, 0}}, ComplexMatrix::Constant(1, 1, 2.0)}};
  const auto model = build_model(1, terms);
  CHECK(model.range() == 0);
  for (const Vec3& k : {Vec3(0, 0, 0), Vec3(1, -2, 3)}) {
    const ComplexMatrix h = bloch_matrix(model, k);
    REQUIRE(h.rows() == 1);
    CHECK(h(0, 0).real() == doctest::Approx(2.0));
    CHECK(std::abs(h(0, 0).imag()) < 1e-15);
  }
}

TEST_CASE("hermitian completion of a lone hopping") {
  const ComplexMatrix a = mat2({1, 2}, {0.5, -1}, {3, 0}, {0, 4});
  const std::vector<HoppingTerm> terms{{{{1, 0, 0}}, a}};
  const auto model = build_model(2, terms);
  REQUIRE(model.terms().size() == 2);
  CHECK(max_abs(model.terms().at({{1, 0, 0}}) - a) == 0.0);
  CHECK(max_abs(model.terms().at({{-1, 0, 0}}) - a.adjoint()) == 0.0);
  CHECK(model.range() == 1);
}

TEST_CASE("hermitian completion symmetrizes a pair") {
  const ComplexMatrix a = mat2({1, 0}, {2, 0}, {0, 0}, {1, 0});
  const ComplexMatrix b = mat2({3, 0}, {0, 0}, {0, 1}, {0, 0});
  const std::vector<HoppingTerm> terms{{{{0, 1, 0}}, a}, {{{0, -1, 0}}, b}};
  const auto model = build_model(2, terms);
  const ComplexMatrix expected = 0.5 * (a + b.adjoint());
  CHECK(max_abs(model.terms().at({{0, 1, 0}}) - expected) < 1e-15);
  CHECK(max_abs(model.terms().at({{0, -1, 0}}) - expected.adjoint()) < 1e-15);
}

TEST_CASE("on-site term is made hermitian and duplicates add") {
  const ComplexMatrix a = mat2({1, 0}, {0, 1}, {0, 0}, {-1, 0});
  const std::vector<HoppingTerm> terms{{{{0, 0, 0}}, a}, {{{0, 0, 0}}, a}};
  const auto model = build_model(2, terms);
  const ComplexMatrix onsite = model.terms().at({{0, 0, 0}});
  CHECK(max_abs(onsite - onsite.adjoint()) == 0.0);
  CHECK(max_abs(onsite - (a + a.adjoint())) < 1e-15);
}

TEST_CASE("build_model rejects bad input") {
  const std::vector<HoppingTerm> wrong{{{{0, 0, 0}}, ComplexMatrix::Identity(3, 3)}};
  CHECK_THROWS_AS(build_model(2, wrong), ModelError);
  CHECK_THROWS_AS(build_model(0, {}), ModelError);
  ComplexMatrix bad = ComplexMatrix::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  const std::vector<HoppingTerm> nan{{{{1, 0, 0}}, bad}};
  try {
    build_model(2, nan);
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(e.code() == "non_finite");
  }
}

TEST_CASE("minimal model matches its h-vector") {
  CHECK(minimal_model(0.0).range() == 1);
  SUBCASE("node and annihilation points") {
    CHECK(max_abs(bloch_matrix(minimal_model(0.0), Vec3(0, 0, kPi / 2))) < 1e-15);
    CHECK(pauli_decompose(bloch_matrix(minimal_model(-1.0), Vec3(0, 0, kPi))).h.norm() < 1e-15);
    CHECK(pauli_decompose(bloch_matrix(minimal_model(1.0), Vec3(0, 0, 0))).h.norm() < 1e-15);
  }
  SUBCASE("hand-evaluated point") {
    const ComplexMatrix h = bloch_matrix(minimal_model(0.0), Vec3(kPi / 2, 0, 0));
    CHECK(max_abs(h - mat2(0, 1, 1, 0)) < 1e-15);
    const auto p = pauli_decompose(bloch_matrix(minimal_model(0.0), Vec3(0, 0, 0)));
    CHECK(p.h0 == 0.0);
    CHECK((p.h - Vec3(0, 0, -1)).norm() < 1e-15);
  }
  SUBCASE("random points") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (double t : {-0.9, 0.0, 0.4, 2.0}) {
      const auto model = minimal_model(t);
      for (int i = 0; i < 50; ++i) {
        const Vec3 k(u(rng), u(rng), u(rng));
        const auto p = pauli_decompose(bloch_matrix(model, k));
        CHECK(std::abs(p.h0) < 1e-14);
        CHECK((p.h - minimal_h(t, k)).norm() < 1e-13);
        const auto lambda = eigvalsh(bloch_matrix(model, k));
        CHECK(lambda[0] == doctest::Approx(-p.h.norm()).epsilon(1e-12));
        CHECK(lambda[1] == doctest::Approx(p.h.norm()).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("bloch matrices are hermitian and periodic") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-kPi, kPi);
  std::vector<HoppingTerm> terms;
  for (int x = -1; x <= 1; ++x)
    for (int y = -2; y <= 0; ++y) {
      ComplexMatrix a(3, 3);
      for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = cd(g(rng), g(rng));
      terms.push_back({{{x, y, 1}}, a});
    }
  const auto model = build_model(3, terms);
  for (int i = 0; i < 40; ++i) {
    const Vec3 k(u(rng), u(rng), u(rng));
    const ComplexMatrix h = bloch_matrix(model, k);
    const double scale = 1.0 + max_abs(h);
    CHECK(max_abs(h - h.adjoint()) <= 1e-12 * scale);
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 shifted = k;
      shifted[axis] += kTwoPi;
      CHECK(max_abs(bloch_matrix(model, shifted) - h) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("pauli decomposition") {
  auto identity = pauli_decompose(ComplexMatrix::Identity(2, 2));
  CHECK(identity.h0 == 1.0);
  CHECK(identity.h.norm() == 0.0);
  auto s3 = pauli_decompose(pauli_matrices()[2]);
  CHECK(s3.h0 == 0.0);
  CHECK((s3.h - Vec3(0, 0, 1)).norm() == 0.0);
  auto m = pauli_decompose(mat2(1, 1, 1, -1));
  CHECK((m.h - Vec3(1, 0, 1)).norm() == 0.0);

  const auto& s = pauli_matrices();
  const ComplexMatrix triple = cd(0, -1) * s[0] * s[1] * s[2];
  CHECK(max_abs(triple - ComplexMatrix::Identity(2, 2)) < 1e-15);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    PauliDecomposition p{g(rng), Vec3(g(rng), g(rng), g(rng))};
    const auto back = pauli_decompose(p.matrix());
    CHECK(std::abs(back.h0 - p.h0) < 1e-14);
    CHECK((back.h - p.h).norm() < 1e-14);
  }
  CHECK_THROWS_AS(pauli_decompose(mat2(0, 1, 0, 0)), NumericalError);
  CHECK_THROWS_AS(pauli_decompose(ComplexMatrix::Identity(3, 3)), NumericalError);
}

TEST_CASE("two-pair model folds the third axis") {
  const auto model = two_pair_model(0.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 20; ++i) {
    const Vec3 k(u(rng), u(rng), u(rng));
    const Vec3 h = pauli_decompose(bloch_matrix(model, k)).h;
    CHECK(std::abs(h[2] - (2.0 - std::cos(k[0]) - std::cos(k[1]) - std::cos(2 * k[2]))) < 1e-13);
  }
  CHECK(model.range() == 2);
}

TEST_CASE("h_field needs two bands") {
  const std::vector<HoppingTerm> terms{{{{0, 0, 0}}, ComplexMatrix::Identity(3, 3)}};
  CHECK_THROWS_AS(h_field(build_model(3, terms)), ModelError);
}
