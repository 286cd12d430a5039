#include <doctest.h>

#include <cmath>
#include <random>

#include "relufe/compile.hpp"
#include "relufe/verify.hpp"
#include "testkit.hpp"

using namespace relufe;
using namespace relufe::testkit;

TEST_CASE("check_weak_representation") {
  const auto mesh = freudenthal_mesh(2, 2);
  WeakRepOptions wo;
  wo.samples = 5000;
  SUBCASE("compiled net passes") {
    std::mt19937_64 rng(1);
    const auto v = random_nodal(mesh, rng);
    CompileOptions o;
    o.epsilon = 0.01;
    const auto comp = compile_weak_representation(mesh, v, o);
    const auto r = check_weak_representation(comp.net, v, mesh, 0.01, wo);
    CHECK(r.passed());
    CHECK(r.interior_mismatch <= 1e-9);
  }
  SUBCASE("zero net against v = 1 fails") {
    ReluNet2 zero;
    zero.W1 = Mat::Zero(1, 2);
    zero.b1 = Vec::Zero(1);
    zero.W2 = Mat::Zero(1, 1).sparseView();
    zero.b2 = Vec::Zero(1);
    zero.w3 = RowVec::Zero(1);
    const auto v = constant_function(mesh, std::vector<double>(8, 1.0));
    const auto r = check_weak_representation(zero, v, mesh, 0.01, wo);
    CHECK_FALSE(r.passed());
    CHECK(r.interior_mismatch == doctest::Approx(1.0));
  }
  SUBCASE("v = 0 gives R = 0 and f = 0") {
    const auto v = constant_function(mesh, std::vector<double>(8, 0.0));
    CompileOptions o;
    o.epsilon = 0.01;
    const auto comp = compile_weak_representation(mesh, v, o);
    const auto r = check_weak_representation(comp.net, v, mesh, 0.01, wo);
    CHECK(r.passed());
    CHECK(r.R == 0.0);
    CHECK(r.domain_sup <= 1e-12);
  }
}

TEST_CASE("check_counts") {
  std::mt19937_64 rng(2);
  CompileOptions o;
  o.epsilon = 0.01;
  const auto m22 = freudenthal_mesh(2, 2);
  const auto c22 = check_counts(m22, compile_weak_representation(m22, random_nodal(m22, rng), o).net);
  CHECK(c22.expected_h1 == 14);
  CHECK(c22.expected_h2 == 9);
  CHECK(c22.passed());
  const auto m13 = freudenthal_mesh(1, 3);
  const auto c13 = check_counts(m13, compile_weak_representation(m13, random_nodal(m13, rng), o).net);
  CHECK(c13.expected_h1 == 6);
  CHECK(c13.expected_h2 == 4);
  CHECK(c13.passed());
  const auto fig = pentagon_mesh();
  o.epsilon = 1e-4;
  const auto cf = check_counts(fig, compile_weak_representation(fig, random_nodal(fig, rng), o).net);
  CHECK(cf.interior_hyperplanes == 24);
  CHECK(cf.boundary_hyperplanes == 5);
  CHECK(cf.expected_h1 == 53);
  CHECK(cf.expected_h2 == 19);
  CHECK(cf.passed());
}

TEST_CASE("estimate_lp_error") {
  const auto mesh = freudenthal_mesh(2, 2);
  const ScalarFn g = [](const Vec& x) { return x(0) * x(1); };
  const ScalarFn g1 = [](const Vec& x) { return x(0) * x(1) + 1.0; };
  CHECK(estimate_lp_error(batch_of(g), batch_of(g), mesh, 2.0, 1000, 0).value == 0.0);
  for (double p : {1.0, 2.0, 3.5}) {
    CHECK(estimate_lp_error(batch_of(g1), batch_of(g), mesh, p, 1000, 0).value == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(estimate_lp_error(batch_of(g), batch_of(g), mesh, 0.5, 10, 0), std::invalid_argument);

  SUBCASE("collar-bounded error and monotonicity in epsilon") {
    std::mt19937_64 rng(3);
    const auto v = random_nodal(mesh, rng);
    const double R = sup_norm(mesh, v);
    const double h = mesh_h(mesh);
    // Facet measure of all cells: 8 triangles, legs 1/2 and hypotenuse sqrt(2)/2.
    const double perimeter = 8 * (1.0 + std::sqrt(2.0) / 2.0);
    double last = 0.0;
    for (double scale : {1e-3, 1e-2, 1e-1}) {
      const double eps = scale * h;
      CompileOptions o;
      o.epsilon = eps;
      const auto comp = compile_weak_representation(mesh, v, o);
      const auto err = estimate_lp_error(batch_of(comp.net), batch_of(mesh, v), mesh, 1.0, 200000, 7);
      CHECK(err.value <= 2.0 * R * perimeter * eps + 3.0 * err.stderr_);
      CHECK(err.value >= last);
      last = err.value;
    }
  }
}

TEST_CASE("convergence_experiment mechanics") {
  const ScalarFn affine = [](const Vec& x) { return 0.3 * x(0) - 0.2 * x(1) + 0.1; };
  ConvergenceOptions o;
  o.samples = 20000;
  const auto t = convergence_experiment(affine, 2.0, {2, 4}, 2, o);
  CHECK(t.counts_ok());
  CHECK(t.rows[0].h1 == 14);
  CHECK(t.rows[1].h1 == 30);
  CHECK(t.to_csv().rfind("N,h1,h2,error,stderr\n", 0) == 0);
  CHECK_THROWS_AS(convergence_experiment(affine, 2.0, {4, 2}, 2, o), std::invalid_argument);
  CHECK(fit_loglog_slope({1, 2, 4}, {1, 0.25, 0.0625}) == doctest::Approx(-2.0));
}
