#include "relufe/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace relufe::lp {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;

class Tableau {
public:
  // Last column holds the right-hand side, last row the reduced costs.
  Tableau(Eigen::Index rows, Eigen::Index vars) : t_(Mat::Zero(rows + 1, vars + 1)), basis_(rows) {}

  Mat& data() { return t_; }
  std::vector<Eigen::Index>& basis() { return basis_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index rhs() const { return t_.cols() - 1; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) {
        t_.row(i) -= t_(i, c) * t_.row(r);
      }
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Runs simplex iterations over columns [0, allowed). Returns false when unbounded.
  bool optimize(Eigen::Index allowed) {
    const Eigen::Index obj = rows();
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        if (t_(obj, j) < -kCostTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;

      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < obj; ++i) {
        const double a = t_(i, enter);
        if (a <= kPivotTol) continue;
        const double ratio = t_(i, rhs()) / a;
        const bool better = ratio < best - 1e-14 ||
                            (ratio <= best + 1e-14 && leave >= 0 &&
                             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]);
        if (leave < 0 || better) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

private:
  Mat t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

Result minimize_standard(const Mat& A, const Vec& b, const Vec& c) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  Result result;

  Tableau tab(m, n + m);
  Mat& t = tab.data();
  for (Eigen::Index i = 0; i < m; ++i) {
    double scale = A.row(i).cwiseAbs().maxCoeff();
    scale = std::max(scale, std::abs(b(i)));
    if (scale == 0.0) scale = 1.0;
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    t.row(i).head(n) = sign * A.row(i) / scale;
    t(i, n + i) = 1.0;
    t(i, tab.rhs()) = sign * b(i) / scale;
    tab.basis()[static_cast<std::size_t>(i)] = n + i;
  }

  // Phase one: minimize the sum of artificials.
  for (Eigen::Index i = 0; i < m; ++i) {
    t.row(m).head(n) -= t.row(i).head(n);
    t(m, tab.rhs()) -= t(i, tab.rhs());
  }
  tab.optimize(n + m);
  if (-t(m, tab.rhs()) > 1e-9) {
    result.status = Status::infeasible;
    return result;
  }

  // Drive remaining artificials out of the basis; rows where that fails are redundant.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < n) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(t(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
    }
  }

  // Phase two.
  t.row(m).setZero();
  t.row(m).head(n) = c.transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index bi = tab.basis()[static_cast<std::size_t>(i)];
    if (bi < n && c(bi) != 0.0) t.row(m) -= c(bi) * t.row(i);
  }
  if (!tab.optimize(n)) {
    result.status = Status::unbounded;
    return result;
  }

  result.status = Status::optimal;
  result.x = Vec::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index bi = tab.basis()[static_cast<std::size_t>(i)];
    if (bi < n) result.x(bi) = std::max(0.0, t(i, tab.rhs()));
  }
  result.objective = c.dot(result.x);
  return result;
}

Result maximize_over_polytope(const Mat& normals, const Vec& offsets, const Vec& direction) {
  // x = u - v, slack s >= 0:  W u - W v - s = -offsets.
  const Eigen::Index m = normals.rows();
  const Eigen::Index n = normals.cols();
  Mat A(m, 2 * n + m);
  A << normals, -normals, -Mat::Identity(m, m);
  Vec c = Vec::Zero(2 * n + m);
  c.head(n) = -direction;
  c.segment(n, n) = direction;

  Result r = minimize_standard(A, -offsets, c);
  if (r.status != Status::optimal) return r;
  Result out;
  out.status = Status::optimal;
  out.x = r.x.head(n) - r.x.segment(n, n);
  out.objective = direction.dot(out.x);
  return out;
}

ChebyshevBall chebyshev_center(const Mat& normals, const Vec& offsets) {
  // Variables (u, v, r, s):  W(u - v) - |w_i| r - s = -offsets, maximize r.
  const Eigen::Index m = normals.rows();
  const Eigen::Index n = normals.cols();
  Mat A(m, 2 * n + 1 + m);
  A << normals, -normals, -normals.rowwise().norm(), -Mat::Identity(m, m);
  Vec c = Vec::Zero(2 * n + 1 + m);
  c(2 * n) = -1.0;

  ChebyshevBall ball;
  Result r = minimize_standard(A, -offsets, c);
  ball.status = r.status;
  if (r.status == Status::optimal) {
    ball.center = r.x.head(n) - r.x.segment(n, n);
    ball.radius = r.x(2 * n);
  } else if (r.status == Status::unbounded) {
    ball.radius = std::numeric_limits<double>::infinity();
  }
  return ball;
}

}  // namespace relufe::lp
