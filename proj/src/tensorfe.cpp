#include "relufe/tensorfe.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>

#include "relufe/error.hpp"
#include "relufe/sampling.hpp"

namespace relufe {

std::vector<std::size_t> TensorMesh::shape() const {
  std::vector<std::size_t> s;
  for (const auto& g : grids) s.push_back(g.size());
  return s;
}

void validate_tensor_mesh(const TensorMesh& mesh) {
  if (mesh.grids.empty()) throw ValidationError("tensor mesh has no axes");
  for (std::size_t k = 0; k < mesh.grids.size(); ++k) {
    const auto& g = mesh.grids[k];
    if (g.size() < 2) throw ValidationError("grid " + std::to_string(k) + " needs at least 2 nodes");
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (!(g[i] > g[i - 1])) throw ValidationError("grid " + std::to_string(k) + " is not strictly increasing");
    }
  }
}

std::size_t Tensor::offset(const std::vector<std::size_t>& index) const {
  std::size_t off = 0;
  for (std::size_t k = 0; k < shape.size(); ++k) off = off * shape[k] + index[k];
  return off;
}

double Tensor::frobenius() const {
  double s = 0.0;
  for (double v : data) s += v * v;
  return std::sqrt(s);
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data) m = std::max(m, std::abs(v));
  return m;
}

void validate_tensor_fe(const TensorFE& u) {
  validate_tensor_mesh(u.mesh);
  if (u.coefficients.shape != u.mesh.shape()) throw ValidationError("coefficient shape does not match grid nodes");
  const std::size_t expected = std::accumulate(u.coefficients.shape.begin(), u.coefficients.shape.end(),
                                               std::size_t{1}, std::multiplies<>());
  if (u.coefficients.data.size() != expected) throw ValidationError("coefficient count does not match shape");
}

double eval_tensor_fe(const TensorFE& u, const Vec& x) {
  const std::size_t n = u.mesh.axis_count();
  if (static_cast<std::size_t>(x.size()) != n) throw std::invalid_argument("eval_tensor_fe: dimension mismatch");
  std::vector<std::size_t> left(n);
  std::vector<double> frac(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& g = u.mesh.grids[k];
    const double xk = x(static_cast<Eigen::Index>(k));
    if (xk < g.front() || xk > g.back()) throw std::out_of_range("eval_tensor_fe: point outside the grid");
    auto it = std::upper_bound(g.begin(), g.end(), xk);
    std::size_t i = static_cast<std::size_t>(it - g.begin());
    i = std::clamp<std::size_t>(i, 1, g.size() - 1) - 1;
    left[k] = i;
    frac[k] = (xk - g[i]) / (g[i + 1] - g[i]);
  }
  double value = 0.0;
  std::vector<std::size_t> idx(n);
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double weight = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const bool hi = (corner >> k) & 1U;
      idx[k] = left[k] + (hi ? 1 : 0);
      weight *= hi ? frac[k] : 1.0 - frac[k];
    }
    if (weight != 0.0) value += weight * u.coefficients(idx);
  }
  return value;
}

Tensor reconstruct(const CPFactors& cp, const std::vector<std::size_t>& shape) {
  Tensor t;
  t.shape = shape;
  t.data.assign(std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>()), 0.0);
  const std::size_t n = shape.size();
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t flat = 0; flat < t.data.size(); ++flat) {
    double v = 0.0;
    for (Eigen::Index p = 0; p < cp.rank(); ++p) {
      double term = 1.0;
      for (std::size_t k = 0; k < n; ++k) term *= cp.factors[k](static_cast<Eigen::Index>(idx[k]), p);
      v += term;
    }
    t.data[flat] = v;
    for (std::size_t k = n; k-- > 0;) {
      if (++idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
  return t;
}

namespace {

constexpr double kRankThreshold = 1e-12;

double residual_of(const CPFactors& cp, const Tensor& c) {
  const Tensor r = reconstruct(cp, c.shape);
  double s = 0.0;
  for (std::size_t i = 0; i < c.data.size(); ++i) s += (r.data[i] - c.data[i]) * (r.data[i] - c.data[i]);
  return std::sqrt(s);
}

Mat as_matrix(const Tensor& c) {
  Mat m(static_cast<Eigen::Index>(c.shape[0]), static_cast<Eigen::Index>(c.shape[1]));
  for (std::size_t i = 0; i < c.shape[0]; ++i) {
    for (std::size_t j = 0; j < c.shape[1]; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.data[i * c.shape[1] + j];
    }
  }
  return m;
}

CPFactors svd_factorization(const Tensor& c) {
  const Mat m = as_matrix(c);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();
  Eigen::Index r = 0;
  const double cutoff = sigma.size() ? kRankThreshold * sigma(0) : 0.0;
  while (r < sigma.size() && sigma(r) > cutoff) ++r;
  CPFactors cp;
  if (r == 0) {
    cp.factors = {Mat::Zero(m.rows(), 1), Mat::Zero(m.cols(), 1)};
  } else {
    cp.factors = {svd.matrixU().leftCols(r) * sigma.head(r).asDiagonal(), svd.matrixV().leftCols(r)};
  }
  cp.residual = residual_of(cp, c);
  cp.exact = cp.residual <= 1e-12 * std::max(c.frobenius(), 1e-300) || c.frobenius() == 0.0;
  return cp;
}

// Exact factorization along the longest mode: one rank-one term per nonzero
// fiber, indexed by the remaining modes.
CPFactors fiber_factorization(const Tensor& c) {
  const std::size_t n = c.shape.size();
  const std::size_t longest =
      static_cast<std::size_t>(std::max_element(c.shape.begin(), c.shape.end()) - c.shape.begin());
  std::vector<std::vector<std::size_t>> fibers;
  std::vector<std::size_t> idx(n, 0);
  std::function<void(std::size_t)> walk = [&](std::size_t k) {
    if (k == n) {
      fibers.push_back(idx);
      return;
    }
    if (k == longest) {
      idx[k] = 0;
      walk(k + 1);
      return;
    }
    for (std::size_t i = 0; i < c.shape[k]; ++i) {
      idx[k] = i;
      walk(k + 1);
    }
  };
  walk(0);

  std::vector<std::vector<std::size_t>> kept;
  for (auto f : fibers) {
    bool nonzero = false;
    for (std::size_t i = 0; i < c.shape[longest]; ++i) {
      f[longest] = i;
      if (c(f) != 0.0) nonzero = true;
    }
    if (nonzero) kept.push_back(f);
  }
  if (kept.empty()) kept.push_back(fibers.front());

  CPFactors cp;
  const auto r = static_cast<Eigen::Index>(kept.size());
  for (std::size_t k = 0; k < n; ++k) cp.factors.push_back(Mat::Zero(static_cast<Eigen::Index>(c.shape[k]), r));
  for (Eigen::Index p = 0; p < r; ++p) {
    auto f = kept[static_cast<std::size_t>(p)];
    for (std::size_t k = 0; k < n; ++k) {
      if (k == longest) {
        for (std::size_t i = 0; i < c.shape[k]; ++i) {
          f[longest] = i;
          cp.factors[k](static_cast<Eigen::Index>(i), p) = c(f);
        }
      } else {
        cp.factors[k](static_cast<Eigen::Index>(f[k]), p) = 1.0;
      }
    }
  }
  cp.residual = residual_of(cp, c);
  cp.exact = true;
  cp.fallback = true;
  return cp;
}

// One ALS attempt at fixed rank.
CPFactors als(const Tensor& c, Eigen::Index rank, const CPOptions& opt) {
  const std::size_t n = c.shape.size();
  auto rng = chunk_rng(opt.seed, 0xa15, static_cast<std::uint64_t>(rank));
  std::normal_distribution<double> normal(0.0, 1.0);
  CPFactors cp;
  for (std::size_t k = 0; k < n; ++k) {
    Mat f(static_cast<Eigen::Index>(c.shape[k]), rank);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = normal(rng);
    cp.factors.push_back(f);
  }

  const double norm = std::max(c.frobenius(), 1e-300);
  double previous = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    for (std::size_t k = 0; k < n; ++k) {
      // Normal equations: A_k (Hadamard_{j != k} A_j^T A_j) = X_(k) KhatriRao_{j != k} A_j.
      Mat gram = Mat::Ones(rank, rank);
      for (std::size_t j = 0; j < n; ++j) {
        if (j != k) gram.array() *= (cp.factors[j].transpose() * cp.factors[j]).array();
      }
      Mat mttkrp = Mat::Zero(static_cast<Eigen::Index>(c.shape[k]), rank);
      std::vector<std::size_t> idx(n, 0);
      for (std::size_t flat = 0; flat < c.data.size(); ++flat) {
        const double x = c.data[flat];
        if (x != 0.0) {
          RowVec prod = RowVec::Ones(rank);
          for (std::size_t j = 0; j < n; ++j) {
            if (j != k) prod.array() *= cp.factors[j].row(static_cast<Eigen::Index>(idx[j])).array();
          }
          mttkrp.row(static_cast<Eigen::Index>(idx[k])) += x * prod;
        }
        for (std::size_t j = n; j-- > 0;) {
          if (++idx[j] < c.shape[j]) break;
          idx[j] = 0;
        }
      }
      cp.factors[k] = gram.completeOrthogonalDecomposition().solve(mttkrp.transpose()).transpose();
    }
    const double res = residual_of(cp, c) / norm;
    if (res <= opt.target_tol || previous - res < opt.min_improvement) {
      previous = res;
      break;
    }
    previous = res;
  }
  cp.residual = residual_of(cp, c);
  cp.exact = cp.residual <= 1e-12 * norm;
  return cp;
}

}  // namespace

Eigen::Index numerical_rank(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& sigma = svd.singularValues();
  if (sigma.size() == 0) return 0;
  Eigen::Index r = 0;
  while (r < sigma.size() && sigma(r) > kRankThreshold * sigma(0)) ++r;
  return r;
}

std::size_t rank_upper_bound(const std::vector<std::size_t>& shape) {
  const std::size_t total = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  const std::size_t longest = *std::max_element(shape.begin(), shape.end());
  return total / longest;
}

CPFactors cp_decompose(const Tensor& coeffs, const CPOptions& options) {
  if (coeffs.shape.size() < 2) throw std::invalid_argument("cp_decompose: tensor order must be >= 2");
  if (coeffs.shape.size() == 2) return svd_factorization(coeffs);

  const double norm = coeffs.frobenius();
  if (norm == 0.0) {
    CPFactors zero;
    for (std::size_t s : coeffs.shape) zero.factors.push_back(Mat::Zero(static_cast<Eigen::Index>(s), 1));
    zero.exact = true;
    return zero;
  }
  const auto bound = static_cast<Eigen::Index>(rank_upper_bound(coeffs.shape));
  for (Eigen::Index r = 1; r < bound; ++r) {
    CPFactors cp = als(coeffs, r, options);
    if (cp.residual <= options.target_tol * norm) return cp;
  }
  return fiber_factorization(coeffs);
}

HatNet compile_1d_hat(const std::vector<double>& grid, const std::vector<double>& values) {
  const std::size_t size = grid.size();
  if (size < 2) throw ValidationError("compile_1d_hat: grid needs at least 2 nodes");
  if (values.size() != size) throw ValidationError("compile_1d_hat: grid and values differ in length");
  for (std::size_t i = 1; i < size; ++i) {
    if (!(grid[i] > grid[i - 1])) throw ValidationError("compile_1d_hat: grid must be strictly increasing");
  }
  const std::size_t last = size - 1;
  HatNet net;
  net.W = Vec::Ones(static_cast<Eigen::Index>(size));
  net.W(static_cast<Eigen::Index>(last)) = 0.0;
  net.b.resize(static_cast<Eigen::Index>(size));
  for (std::size_t j = 0; j < last; ++j) net.b(static_cast<Eigen::Index>(j)) = -grid[j];
  net.b(static_cast<Eigen::Index>(last)) = 1.0;

  // Row i: sum_{j < i} (t_i - t_j) w_j + w_last = values_i. Row 0 fixes the
  // constant neuron; row i then determines w_{i-1}.
  Vec& w = net.w;
  w = Vec::Zero(static_cast<Eigen::Index>(size));
  w(static_cast<Eigen::Index>(last)) = values[0];
  for (std::size_t i = 1; i <= last; ++i) {
    double acc = values[i] - w(static_cast<Eigen::Index>(last));
    for (std::size_t j = 0; j + 1 < i; ++j) acc -= (grid[i] - grid[j]) * w(static_cast<Eigen::Index>(j));
    w(static_cast<Eigen::Index>(i - 1)) = acc / (grid[i] - grid[i - 1]);
  }
  return net;
}

TnnCompilation compile_tnn(const TensorFE& u, const TnnCompileOptions& options) {
  validate_tensor_fe(u);
  TnnCompilation out;
  CPOptions cpo;
  cpo.target_tol = options.target_tol;
  cpo.seed = options.seed;
  out.cp = cp_decompose(u.coefficients, cpo);

  const std::size_t n = u.mesh.axis_count();
  Eigen::Index rank = out.cp.rank();
  if (options.whole_space_rank) {
    rank = std::max(rank, static_cast<Eigen::Index>(rank_upper_bound(u.coefficients.shape)));
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& grid = u.mesh.grids[k];
    TensorBranch br;
    br.weights = Mat::Zero(rank, static_cast<Eigen::Index>(grid.size()));
    for (Eigen::Index p = 0; p < out.cp.rank(); ++p) {
      const Vec col = out.cp.factors[k].col(p);
      const HatNet hat = compile_1d_hat(grid, std::vector<double>(col.data(), col.data() + col.size()));
      if (p == 0) {
        br.W = hat.W;
        br.b = hat.b;
      }
      br.weights.row(p) = hat.w.transpose();
    }
    out.net.branches.push_back(std::move(br));
  }
  return out;
}

}  // namespace relufe
