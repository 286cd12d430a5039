#include <doctest.h>

#include <random>

#include "relufe/compile.hpp"
#include "relufe/error.hpp"
#include "relufe/io.hpp"
#include "relufe/network.hpp"
#include "testkit.hpp"

using namespace relufe;
using namespace relufe::testkit;

namespace {

ReluNet2 dense_net(const Mat& W1, const Vec& b1, const Mat& W2, const Vec& b2, const RowVec& w3) {
  ReluNet2 net;
  net.W1 = W1;
  net.b1 = b1;
  net.W2 = W2.sparseView();
  net.b2 = b2;
  net.w3 = w3;
  return net;
}

}  // namespace

TEST_CASE("fnn_forward") {
  SUBCASE("all-zero weights") {
    ReluNet2 net = dense_net(Mat::Zero(3, 2), Vec::Zero(3), Mat::Zero(2, 3), Vec::Zero(2), RowVec::Zero(2));
    CHECK(fnn_forward(net, Vec::Ones(2)) == 0.0);
    net.output_bias = 0.7;
    CHECK(fnn_forward(net, Vec::Ones(2)) == 0.7);
  }
  SUBCASE("hand-evaluated bump") {
    Mat W1(2, 1);
    W1 << 1, -1;
    Vec b1(2);
    b1 << -0.1, 0.9;
    Mat W2(1, 2);
    W2 << -10, -10;
    const ReluNet2 net = dense_net(W1, b1, W2, Vec::Constant(1, 9.0), RowVec::Ones(1));
    CHECK(fnn_forward(net, Vec::Constant(1, 0.5)) == doctest::Approx(1.0));
  }
  SUBCASE("relu kills negatives") {
    const ReluNet2 net = dense_net(Mat::Ones(1, 1), Vec::Zero(1), Mat::Ones(1, 1), Vec::Zero(1), RowVec::Ones(1));
    CHECK(fnn_forward(net, Vec::Constant(1, -3.0)) == 0.0);
  }
  SUBCASE("dimension mismatch") {
    const ReluNet2 net = dense_net(Mat::Ones(1, 1), Vec::Zero(1), Mat::Ones(1, 1), Vec::Zero(1), RowVec::Ones(1));
    CHECK_THROWS_AS(fnn_forward(net, Vec::Ones(2)), std::invalid_argument);
  }
  SUBCASE("validation") {
    ReluNet2 net = dense_net(Mat::Ones(2, 1), Vec::Zero(1), Mat::Ones(1, 2), Vec::Zero(1), RowVec::Ones(1));
    CHECK_THROWS_AS(validate_network(net), ValidationError);
  }
}

TEST_CASE("tnn_forward") {
  TensorNet one;
  for (int k = 0; k < 3; ++k) one.branches.push_back({Vec::Zero(1), Vec::Ones(1), Mat::Ones(1, 1)});
  Vec x(3);
  x << 0.3, -4.0, 7.0;
  CHECK(tnn_forward(one, x) == 1.0);

  TensorNet two = one;
  for (auto& b : two.branches) {
    b.weights.conservativeResize(2, 1);
    b.weights(1, 0) = 0.0;
  }
  CHECK(tnn_forward(two, x) == tnn_forward(one, x));

  TensorNet bad = one;
  bad.branches[1].weights = Mat::Ones(2, 1);
  CHECK_THROWS_WITH_AS(validate_tensor_net(bad), doctest::Contains("branch_2"), ValidationError);
}

TEST_CASE("network serialization") {
  const auto mesh = freudenthal_mesh(2, 2);
  std::mt19937_64 rng(3);
  CompileOptions o;
  o.epsilon = 0.01;
  const auto comp = compile_weak_representation(mesh, random_nodal(mesh, rng), o);
  const std::string text = io::format_network(comp.net);
  const ReluNet2 back = io::parse_network(text);
  CHECK(back.W1 == comp.net.W1);
  CHECK(back.b1 == comp.net.b1);
  CHECK(Mat(back.W2) == Mat(comp.net.W2));
  CHECK(back.b2 == comp.net.b2);
  CHECK(back.w3 == comp.net.w3);
  REQUIRE(back.provenance);
  CHECK(back.provenance->t0 == comp.net.provenance->t0);
  CHECK(io::format_network(back) == text);

  SUBCASE("missing w3 names the field") {
    std::string broken = text;
    const auto pos = broken.find("\"w3\"");
    broken.replace(pos, 4, "\"zz\"");
    CHECK_THROWS_WITH_AS(io::parse_network(broken), doctest::Contains("w3"), ParseError);
  }
  SUBCASE("out-of-range W2 column") {
    const std::string small =
        R"({"arch":"fnn2","n":1,"h1":1,"h2":1,"W1":[[1]],"b1":[0],"W2":[[0,3,1.0]],"b2":[0],"w3":[1]})";
    CHECK_THROWS_AS(io::parse_network(small), ValidationError);
  }
  SUBCASE("malformed json") { CHECK_THROWS_AS(io::parse_network("{"), ParseError); }
}

TEST_CASE("mesh, function and tnn serialization") {
  const auto mesh = freudenthal_mesh(2, 2);
  const auto back = io::parse_mesh(io::format_mesh(mesh));
  REQUIRE(back.cells.size() == mesh.cells.size());
  CHECK(back.vertices.size() == mesh.vertices.size());
  CHECK(back.domain_hull.has_value());
  CHECK(mesh_fingerprint(back) == mesh_fingerprint(io::parse_mesh(io::format_mesh(back))));
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    for (std::size_t k = 0; k < mesh.cells[c].halfspaces.size(); ++k) {
      CHECK(back.cells[c].halfspaces[k].normal == mesh.cells[c].halfspaces[k].normal);
      CHECK(back.cells[c].halfspaces[k].offset == mesh.cells[c].halfspaces[k].offset);
    }
  }

  const auto vmesh = io::parse_mesh(R"({"dimension":1,"cells":[{"vertices":[[0],[0.5]]},{"vertices":[[0.5],[1]]}]})");
  CHECK(vmesh.vertices.size() == 3);
  const auto f = io::parse_function(R"({"kind":"nodal-linear","nodal_values":{"0":0,"1":1,"2":0}})", vmesh);
  CHECK(f.pieces[0].gradient(0) == doctest::Approx(2.0));
  CHECK_THROWS_WITH_AS(io::parse_function(R"({"kind":"general","pieces":[{"a":[1]}, {"a":[1],"c":0}]})", vmesh),
                       doctest::Contains("pieces[0]"), ParseError);
  const auto g = io::parse_function(io::format_function(f), vmesh);
  CHECK(g.pieces[1].constant == f.pieces[1].constant);

  TensorNet t;
  t.branches.push_back({Vec::Ones(2), Vec::Zero(2), Mat::Ones(1, 2)});
  t.branches.push_back({Vec::Ones(3), Vec::Zero(3), Mat::Ones(1, 3)});
  const auto t2 = io::parse_tensor_net(io::format_tensor_net(t));
  CHECK(t2.branches[1].W == t.branches[1].W);

  const auto pts = io::parse_points("0.1 0.2\n# comment\n\n0.3,0.4\n", 2);
  CHECK(pts.cols() == 2);
  CHECK(pts(1, 1) == 0.4);
  CHECK_THROWS_AS(io::parse_points("0.1 x\n", 2), ParseError);
}

TEST_CASE("batch forward matches pointwise") {
  const auto mesh = freudenthal_mesh(3, 2);
  std::mt19937_64 rng(8);
  CompileOptions o;
  o.epsilon = 0.005;
  const auto comp = compile_weak_representation(mesh, random_nodal(mesh, rng), o);
  PointSet pts = PointSet::Random(3, 2000);
  const Vec s = fnn_forward_batch(comp.net, pts, Exec::serial);
  const Vec p = fnn_forward_batch(comp.net, pts, Exec::parallel);
  CHECK(s == p);
  for (Eigen::Index i = 0; i < 50; ++i) CHECK(s(i) == fnn_forward(comp.net, pts.col(i)));
}
