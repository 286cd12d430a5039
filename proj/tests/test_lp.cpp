#include <doctest.h>

#include "relufe/lp.hpp"

using namespace relufe;

TEST_CASE("lp: small standard-form program") {
  // min -x - y  s.t. x + s1 = 2, y + s2 = 3
  Mat A(2, 4);
  A << 1, 0, 1, 0, 0, 1, 0, 1;
  Vec b(2);
  b << 2, 3;
  Vec c(4);
  c << -1, -1, 0, 0;
  const auto r = lp::minimize_standard(A, b, c);
  REQUIRE(r.status == lp::Status::optimal);
  CHECK(r.objective == doctest::Approx(-5.0));
  CHECK(r.x(0) == doctest::Approx(2.0));
  CHECK(r.x(1) == doctest::Approx(3.0));
}

TEST_CASE("lp: infeasible and unbounded") {
  Mat A(1, 1);
  A << 1;
  Vec b(1);
  b << -1;
  Vec c(1);
  c << 1;
  CHECK(lp::minimize_standard(A, b, c).status == lp::Status::infeasible);

  Mat A2(1, 2);
  A2 << 1, -1;
  Vec b2(1);
  b2 << 0;
  Vec c2(2);
  c2 << -1, 0;
  CHECK(lp::minimize_standard(A2, b2, c2).status == lp::Status::unbounded);
}

TEST_CASE("lp: degenerate program terminates under Bland's rule") {
  // Classic cycling example (Beale).
  Mat A(3, 7);
  A << 0.25, -8, -1, 9, 1, 0, 0,  //
      0.5, -12, -0.5, 3, 0, 1, 0,  //
      0, 0, 1, 0, 0, 0, 1;
  Vec b(3);
  b << 0, 0, 1;
  Vec c(7);
  c << -0.75, 20, -0.5, 6, 0, 0, 0;
  const auto r = lp::minimize_standard(A, b, c);
  REQUIRE(r.status == lp::Status::optimal);
  CHECK(r.objective == doctest::Approx(-1.25));
}

TEST_CASE("lp: polytope maximization and Chebyshev center") {
  Mat W(4, 2);
  W << 1, 0, -1, 0, 0, 1, 0, -1;
  Vec b(4);
  b << 0, 1, 0, 2;
  Vec d(2);
  d << 1, 1;
  const auto r = lp::maximize_over_polytope(W, b, d);
  REQUIRE(r.status == lp::Status::optimal);
  CHECK(r.objective == doctest::Approx(3.0));

  const auto ball = lp::chebyshev_center(W, b);
  REQUIRE(ball.status == lp::Status::optimal);
  CHECK(ball.radius == doctest::Approx(0.5));
  CHECK(ball.center(0) == doctest::Approx(0.5));

  Mat H(1, 2);
  H << 1, 0;
  Vec hb(1);
  hb << 0;
  CHECK(lp::maximize_over_polytope(H, hb, d).status == lp::Status::unbounded);
}
