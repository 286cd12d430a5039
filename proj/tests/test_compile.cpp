#include <doctest.h>

#include <cmath>
#include <random>

#include "relufe/compile.hpp"
#include "relufe/error.hpp"
#include "relufe/geometry.hpp"
#include "relufe/mesh.hpp"
#include "testkit.hpp"

using namespace relufe;
using namespace relufe::testkit;

namespace {
Vec pt(double x) { return Vec::Constant(1, x); }
Vec pt(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}
ConvexCell triangle() {
  ConvexCell c;
  RowVec a(2), b(2), d(2);
  a << 1, 0;
  b << 0, 1;
  d << -1, -1;
  c.halfspaces = {{a, 0.0}, {b, 0.0}, {d, 1.0}};
  return c;
}
}  // namespace

TEST_CASE("positive_normal_combination") {
  CHECK(positive_normal_combination(interval(0.0, 1.0)).isApprox(Vec::Ones(2)));
  CHECK(positive_normal_combination(unit_square()).isApprox(Vec::Ones(4)));
  CHECK(positive_normal_combination(triangle()).isApprox(Vec::Ones(3)));

  ConvexCell half;
  half.halfspaces = {{RowVec::Ones(1), 0.0}};
  CHECK_THROWS_AS(positive_normal_combination(half), CompileError);

  // Unequal normals: x >= 0 with weight 3, 1 - x >= 0 unit.
  ConvexCell scaled = interval(0.0, 1.0);
  scaled.halfspaces[0].normal *= 3.0;
  const Vec l = positive_normal_combination(scaled);
  CHECK((l.array() >= 1.0 - 1e-12).all());
  CHECK(std::abs(3.0 * l(0) - l(1)) < 1e-10);
}

TEST_CASE("solve_mu") {
  CHECK(solve_mu(triangle(), RowVec::Zero(2)).norm() == 0.0);
  RowVec a(2);
  a << 1, 0;
  const Vec mu = solve_mu(triangle(), a);
  CHECK(mu(0) == doctest::Approx(-2.0 / 3.0));
  CHECK(mu(1) == doctest::Approx(1.0 / 3.0));
  CHECK(mu(2) == doctest::Approx(1.0 / 3.0));

  const Vec m1 = solve_mu(interval(0.0, 1.0), RowVec::Ones(1));
  CHECK(m1(0) == doctest::Approx(-0.5));
  CHECK(m1(1) == doctest::Approx(0.5));
}

TEST_CASE("shift_t0") {
  const auto cell = interval(0.0, 1.0);
  // sum (mu + s lambda) b = 1 for this cell, so |1 + c + R| / (eps min lambda |w|).
  const Shift a = shift_t0(cell, Vec::Zero(2), Vec::Ones(2), 0.0, 1.0, 0.1);
  CHECK(a.s == doctest::Approx(1.0));
  CHECK(a.t0 == doctest::Approx(20.0));
  const Shift b = shift_t0(cell, Vec::Zero(2), Vec::Ones(2), 0.0, 0.0, 0.1);
  CHECK(b.s == doctest::Approx(1.0));
  CHECK(b.t0 == doctest::Approx(10.0));
  const Shift c = shift_t0(unit_square(), Vec::Ones(4), Vec::Ones(4), 0.0, 1.0, 0.1);
  CHECK(c.s == doctest::Approx(2.0));
  CHECK_THROWS_AS(shift_t0(cell, Vec::Zero(2), Vec::Ones(2), 0.0, 1.0, 0.0), CompileError);
  // Large s dominates when the fraction is small.
  const Shift d = shift_t0(cell, Vec::Constant(2, 50.0), Vec::Ones(2), -100.0, 0.0, 1.0);
  CHECK(d.t0 >= d.s + 1.0);
}

TEST_CASE("compile_cell_bump") {
  SUBCASE("interval, v = 0, R = 1, eps = 0.1") {
    AffinePiece zero{RowVec::Zero(1), 0.0};
    const auto bump = compile_cell_bump(interval(0.0, 1.0), zero, 1.0, 0.1);
    CHECK(bump.W_I(0, 0) == 1.0);
    CHECK(bump.W_I(1, 0) == -1.0);
    CHECK(bump.b_I(0) == doctest::Approx(-0.1));
    CHECK(bump.b_I(1) == doctest::Approx(0.9));
    CHECK(bump.w_II(0) == doctest::Approx(-20.0));
    CHECK(bump.w_II(1) == doctest::Approx(-20.0));
    CHECK(bump.b_II == doctest::Approx(17.0));
    CHECK(bump.eval(pt(0.5)) == doctest::Approx(1.0));
    CHECK(bump.eval(pt(0.0)) == 0.0);
    CHECK(bump.eval(pt(2.0)) == 0.0);
  }
  SUBCASE("v = -R gives zero on the shrunk cell") {
    const auto mesh = freudenthal_mesh(2, 1);
    AffinePiece minus{RowVec::Zero(2), -1.5};
    const auto bump = compile_cell_bump(mesh.cells[0], minus, 1.5, 0.05);
    const auto s = sample_shrunk_domain(single_cell_mesh(mesh.cells[0]), 0.05, 200, 0);
    for (Eigen::Index i = 0; i < s.points.cols(); ++i) CHECK(std::abs(bump.eval(s.points.col(i))) < 1e-12);
  }
  SUBCASE("unit square, v = x, R = 1, eps = 0.01") {
    AffinePiece x{RowVec::Zero(2), 0.0};
    x.gradient(0) = 1.0;
    const auto bump = compile_cell_bump(unit_square(), x, 1.0, 0.01);
    CHECK(bump.eval(pt(0.5, 0.5)) == doctest::Approx(1.5));
    CHECK(bump.eval(pt(0.3, 0.7)) == doctest::Approx(1.3));
    CHECK(bump.eval(pt(-0.01, 0.5)) == 0.0);
    CHECK(bump.eval(pt(1.5, 1.5)) == 0.0);
    // Collar stays within [0, 2R].
    for (double t = 0.0; t <= 0.01; t += 0.001) {
      const double f = bump.eval(pt(t, 0.5));
      CHECK(f >= 0.0);
      CHECK(f <= 2.0 + 1e-12);
    }
  }
}

TEST_CASE("compile_weak_representation") {
  SUBCASE("Freudenthal 2x2 sizes") {
    const auto mesh = freudenthal_mesh(2, 2);
    std::mt19937_64 rng(1);
    CompileOptions o;
    o.epsilon = 0.01;
    const auto comp = compile_weak_representation(mesh, random_nodal(mesh, rng), o);
    CHECK(comp.net.h1() == 14);
    CHECK(comp.net.h2() == 9);
    o.output_bias = true;
    const auto biased = compile_weak_representation(mesh, random_nodal(mesh, rng), o);
    CHECK(biased.net.h2() == 8);
    REQUIRE(biased.net.output_bias);
  }
  SUBCASE("single interval, v = x") {
    const auto mesh = single_cell_mesh(interval(0.0, 1.0));
    PiecewiseLinear v;
    v.pieces = {{RowVec::Ones(1), 0.0}};
    CompileOptions o;
    o.epsilon = 0.05;
    const auto comp = compile_weak_representation(mesh, v, o);
    CHECK(comp.net.h1() == 2);
    CHECK(comp.net.h2() == 2);
    for (double x = 0.05; x <= 0.95; x += 0.01) CHECK(fnn_forward(comp.net, pt(x)) == doctest::Approx(x).epsilon(1e-12));
    CHECK(fnn_forward(comp.net, pt(3.0)) == doctest::Approx(-1.0));
  }
  SUBCASE("Freudenthal 4x4 sizes") {
    const auto mesh = freudenthal_mesh(2, 4);
    CompileOptions o;
    o.epsilon = 0.001;
    const auto comp = compile_weak_representation(mesh, constant_function(mesh, std::vector<double>(32, 1.0)), o);
    CHECK(comp.net.h1() == 30);
    CHECK(comp.net.h2() == 33);
  }
  SUBCASE("errors") {
    const auto mesh = freudenthal_mesh(1, 2);
    CompileOptions o;
    o.epsilon = 0.0;
    CHECK_THROWS_AS(compile_weak_representation(mesh, constant_function(mesh, {1, 2}), o), CompileError);
    o.epsilon = 0.3;
    CHECK_THROWS_WITH_AS(compile_weak_representation(mesh, constant_function(mesh, {1, 2}), o),
                         doctest::Contains("epsilon too large"), CompileError);
  }
}

TEST_CASE("merge_duplicate_neurons") {
  SUBCASE("two intervals: opposite orientations stay, shared ones merge") {
    const auto mesh = interval_mesh({0.0, 0.5, 1.0});
    CompileOptions o;
    o.epsilon = 0.01;
    const auto comp = compile_weak_representation(mesh, constant_function(mesh, {1.0, -1.0}), o);
    CHECK(comp.unmerged.net.h1() == 4);
    CHECK(comp.net.h1() == 4);
    CHECK(comp.registry.size() == 4);
  }
  SUBCASE("Freudenthal: shared facets merge and the function is unchanged") {
    const auto mesh = freudenthal_mesh(2, 3);
    std::mt19937_64 rng(9);
    CompileOptions o;
    o.epsilon = 0.003;
    const auto comp = compile_weak_representation(mesh, random_nodal(mesh, rng), o);
    CHECK(comp.unmerged.net.h1() == 3 * 18);
    CHECK(comp.net.h1() == 2 * 9 + 4);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    for (int i = 0; i < 300; ++i) {
      const Vec x = pt(u(rng), u(rng));
      CHECK(std::abs(fnn_forward(comp.net, x) - fnn_forward(comp.unmerged.net, x)) <= 1e-12);
    }
  }
  SUBCASE("a facet stored as (2w, 2b) merges with scale 2") {
    PolytopeMesh mesh = freudenthal_mesh(2, 2);
    // Find two cells sharing a directed hyperplane and double it in the second.
    const auto base = build_registry(mesh);
    std::size_t c1 = 0, k1 = 0, c2 = 0, k2 = 0;
    bool found = false;
    for (std::size_t a = 0; a < mesh.cells.size() && !found; ++a)
      for (std::size_t b = a + 1; b < mesh.cells.size() && !found; ++b)
        for (std::size_t i = 0; i < base.facet_refs()[a].size() && !found; ++i)
          for (std::size_t j = 0; j < base.facet_refs()[b].size() && !found; ++j)
            if (base.facet_refs()[a][i].entry == base.facet_refs()[b][j].entry) {
              c1 = a, k1 = i, c2 = b, k2 = j, found = true;
            }
    REQUIRE(found);
    mesh.cells[c2].halfspaces[k2].normal *= 2.0;
    mesh.cells[c2].halfspaces[k2].offset *= 2.0;
    const auto reg = build_registry(mesh);
    CHECK(reg.facet_refs()[c2][k2].entry == reg.facet_refs()[c1][k1].entry);
    CHECK(reg.facet_refs()[c2][k2].scale == doctest::Approx(2.0 * reg.facet_refs()[c1][k1].scale));

    std::mt19937_64 rng(5);
    CompileOptions o;
    o.epsilon = 0.01;
    const auto comp = compile_weak_representation(mesh, random_nodal(mesh, rng), o);
    CHECK(comp.net.h1() == 14);
    std::uniform_real_distribution<double> u(-0.2, 1.2);
    for (int i = 0; i < 200; ++i) {
      const Vec x = pt(u(rng), u(rng));
      CHECK(std::abs(fnn_forward(comp.net, x) - fnn_forward(comp.unmerged.net, x)) <= 1e-12);
    }
  }
}

TEST_CASE("compile_compact_support") {
  SUBCASE("v = 0 on a single cell gives f = 0") {
    const auto mesh = single_cell_mesh(unit_square());
    const auto comp = compile_compact_support(mesh, constant_function(mesh, {0.0}), 0.05);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (int i = 0; i < 500; ++i) CHECK(std::abs(fnn_forward(comp.net, pt(u(rng), u(rng)))) <= 1e-12);
  }
  SUBCASE("nodal function vanishes outside and matches inside") {
    const auto mesh = freudenthal_mesh(2, 2);
    std::mt19937_64 rng(4);
    const auto v = random_nodal(mesh, rng);
    const double eps = 0.01;
    const auto comp = compile_compact_support(mesh, v, eps);
    CHECK(comp.net.h1() == 14);
    CHECK(comp.net.h2() == 9);
    CHECK(std::abs(fnn_forward(comp.net, pt(-0.5, 0.5))) <= 1e-12);
    CHECK(std::abs(fnn_forward(comp.net, pt(3.0, 3.0))) <= 1e-12);
    const auto s = sample_shrunk_domain(mesh, eps, 2000, 1);
    for (Eigen::Index i = 0; i < s.points.cols(); ++i) {
      CHECK(std::abs(fnn_forward(comp.net, s.points.col(i)) - v.pieces[s.cell[i]].eval(s.points.col(i))) < 1e-9);
    }
  }
  SUBCASE("requires a hull") {
    PolytopeMesh mesh = freudenthal_mesh(1, 2);
    mesh.domain_hull.reset();
    CHECK_THROWS_AS(compile_compact_support(mesh, constant_function(mesh, {1, 1}), 0.01), CompileError);
  }
}

TEST_CASE("mesh_fingerprint is stable") {
  CHECK(mesh_fingerprint(freudenthal_mesh(2, 2)) == mesh_fingerprint(freudenthal_mesh(2, 2)));
  CHECK(mesh_fingerprint(freudenthal_mesh(2, 2)) != mesh_fingerprint(freudenthal_mesh(2, 3)));
  CHECK(mesh_fingerprint(freudenthal_mesh(2, 2)).size() == 16);
}
