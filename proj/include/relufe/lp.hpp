#pragma once

#include "relufe/types.hpp"

namespace relufe::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  double objective = 0.0;
  Vec x;
};

/// Dense two-phase simplex with Bland's rule:
///   minimize c^T x  subject to  A x = b,  x >= 0.
/// Intended for the small per-cell programs used by the compiler
/// (tens of rows), not for large sparse problems.
Result minimize_standard(const Mat& A, const Vec& b, const Vec& c);

/// Maximizes direction . x over {x : W x + offsets >= 0} with x free.
/// Rows of `normals` are the halfspace normals.
Result maximize_over_polytope(const Mat& normals, const Vec& offsets, const Vec& direction);

struct ChebyshevBall {
  Status status = Status::infeasible;
  Vec center;
  double radius = 0.0;
};

/// Largest inscribed ball of {x : W x + offsets >= 0}. An unbounded polytope
/// may report an unbounded radius.
ChebyshevBall chebyshev_center(const Mat& normals, const Vec& offsets);

}  // namespace relufe::lp
