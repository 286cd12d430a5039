#include <doctest.h>

#include <random>

#include "relufe/error.hpp"
#include "relufe/tensorfe.hpp"

using namespace relufe;

namespace {

TensorFE make_fe(const std::vector<std::vector<double>>& grids, const std::vector<double>& coeffs) {
  TensorFE u;
  u.mesh.grids = grids;
  u.coefficients.shape = u.mesh.shape();
  u.coefficients.data = coeffs;
  return u;
}

Vec pt(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_CASE("eval_tensor_fe") {
  const auto ones = make_fe({{0, 0.3, 1}, {0, 1}}, std::vector<double>(6, 1.0));
  CHECK(eval_tensor_fe(ones, pt(0.77, 0.12)) == doctest::Approx(1.0));

  const auto xy = make_fe({{0, 1}, {0, 1}}, {0, 0, 0, 1});
  CHECK(eval_tensor_fe(xy, pt(0.5, 0.5)) == doctest::Approx(0.25));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> c(12);
  for (auto& x : c) x = u(rng);
  const auto fe = make_fe({{0, 0.2, 0.7, 1}, {-1, 0, 2}}, c);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(eval_tensor_fe(fe, pt(fe.mesh.grids[0][i], fe.mesh.grids[1][j])) == fe.coefficients({i, j}));
  CHECK_THROWS_AS(eval_tensor_fe(fe, pt(2.0, 0.0)), std::out_of_range);
  CHECK_THROWS_AS(validate_tensor_fe(make_fe({{0, 0, 1}}, {1, 2, 3})), ValidationError);
}

TEST_CASE("cp_decompose") {
  SUBCASE("rank one outer product") {
    Tensor t;
    t.shape = {3, 4};
    const double a[3] = {1, -2, 0.5}, b[4] = {3, 1, -1, 2};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) t.data.push_back(a[i] * b[j]);
    const auto cp = cp_decompose(t);
    CHECK(cp.rank() == 1);
    CHECK(cp.residual <= 1e-12 * t.frobenius());
  }
  SUBCASE("identity") {
    Tensor t;
    t.shape = {2, 2};
    t.data = {1, 0, 0, 1};
    CHECK(cp_decompose(t).rank() == 2);
  }
  SUBCASE("generic 5x6") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Tensor t;
    t.shape = {5, 6};
    for (int i = 0; i < 30; ++i) t.data.push_back(g(rng));
    const auto cp = cp_decompose(t);
    CHECK(cp.rank() == 5);
    CHECK(cp.residual < 1e-12 * t.frobenius() * 10);
  }
  SUBCASE("order three reconstructs") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Tensor t;
    t.shape = {3, 2, 4};
    for (int i = 0; i < 24; ++i) t.data.push_back(g(rng));
    const auto cp = cp_decompose(t);
    const Tensor r = reconstruct(cp, t.shape);
    double err = 0;
    for (std::size_t i = 0; i < t.size(); ++i) err = std::max(err, std::abs(r.data[i] - t.data[i]));
    CHECK(err < 1e-9);
    CHECK(static_cast<std::size_t>(cp.rank()) <= rank_upper_bound(t.shape));
  }
}

TEST_CASE("compile_1d_hat") {
  const auto h = compile_1d_hat({0, 0.5, 1}, {0, 1, 0});
  CHECK(h.w(0) == doctest::Approx(2.0));
  CHECK(h.w(1) == doctest::Approx(-4.0));
  CHECK(h.w(2) == doctest::Approx(0.0));
  CHECK(h.W == (Vec(3) << 1, 1, 0).finished());
  CHECK(h.b == (Vec(3) << 0, -0.5, 1).finished());

  CHECK(compile_1d_hat({0, 0.3, 0.6, 1}, {0, 0, 0, 0}).w.norm() == 0.0);
  const auto one = compile_1d_hat({0, 0.3, 0.6, 1}, {1, 1, 1, 1});
  CHECK(one.w.head(3).norm() == doctest::Approx(0.0));
  CHECK(one.w(3) == doctest::Approx(1.0));
  CHECK_THROWS_AS(compile_1d_hat({0, 0.5, 0.5}, {0, 0, 0}), ValidationError);
}

TEST_CASE("compile_tnn") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  SUBCASE("generic 4x5 cells") {
    std::vector<double> grid_x{0, 0.25, 0.5, 0.75, 1}, grid_y{0, 0.2, 0.4, 0.6, 0.8, 1};
    std::vector<double> c(30);
    for (auto& x : c) x = g(rng);
    const auto comp = compile_tnn(make_fe({grid_x, grid_y}, c));
    CHECK(comp.net.rank() == 5);
    CHECK(comp.net.branches[0].width() == 5);
    CHECK(comp.net.branches[1].width() == 6);
  }
  SUBCASE("generic 4x5 nodes") {
    std::vector<double> c(20);
    for (auto& x : c) x = g(rng);
    const auto u = make_fe({{0, 1, 2, 3}, {0, 1, 2, 3, 4}}, c);
    const auto comp = compile_tnn(u);
    CHECK(comp.net.rank() == 4);
    CHECK(comp.net.branches[0].width() == 4);
    CHECK(comp.net.branches[1].width() == 5);
    for (double x = 0; x <= 3; x += 0.37)
      for (double y = 0; y <= 4; y += 0.41) CHECK(tnn_forward(comp.net, pt(x, y)) == doctest::Approx(eval_tensor_fe(u, pt(x, y))));
  }
  SUBCASE("constant and xy are rank one") {
    const auto one = compile_tnn(make_fe({{0, 0.5, 1}, {0, 1}}, std::vector<double>(6, 1.0)));
    CHECK(one.net.rank() == 1);
    CHECK(tnn_forward(one.net, pt(0.3, 0.9)) == doctest::Approx(1.0));
    const auto xy = compile_tnn(make_fe({{0, 1}, {0, 1}}, {0, 0, 0, 1}));
    CHECK(xy.net.rank() == 1);
    CHECK(tnn_forward(xy.net, pt(0.3, 0.9)) == doctest::Approx(0.27));
  }
  SUBCASE("whole-space rank pads") {
    TnnCompileOptions o;
    o.whole_space_rank = true;
    const auto one = compile_tnn(make_fe({{0, 0.5, 1}, {0, 0.5, 1}}, std::vector<double>(9, 1.0)), o);
    CHECK(one.net.rank() == 3);
    CHECK(tnn_forward(one.net, pt(0.3, 0.9)) == doctest::Approx(1.0));
  }
  SUBCASE("three axes") {
    std::vector<double> c(2 * 3 * 2);
    for (auto& x : c) x = g(rng);
    const auto u = make_fe({{0, 1}, {0, 0.5, 1}, {0, 1}}, c);
    const auto comp = compile_tnn(u);
    Vec x(3);
    x << 0.3, 0.7, 0.2;
    CHECK(tnn_forward(comp.net, x) == doctest::Approx(eval_tensor_fe(u, x)));
  }
}
