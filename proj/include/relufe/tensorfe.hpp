#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "relufe/network.hpp"

namespace relufe {

/// Tensor-product grid: one strictly increasing node list per axis.
struct TensorMesh {
  std::vector<std::vector<double>> grids;

  std::size_t axis_count() const { return grids.size(); }
  std::vector<std::size_t> shape() const;  // nodes per axis
};

void validate_tensor_mesh(const TensorMesh& mesh);

/// Dense n-way array, row-major (last index fastest).
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  std::size_t size() const { return data.size(); }
  std::size_t offset(const std::vector<std::size_t>& index) const;
  double operator()(const std::vector<std::size_t>& index) const { return data[offset(index)]; }
  double frobenius() const;
  double max_abs() const;
};

/// Continuous piecewise multilinear function given by its nodal values.
struct TensorFE {
  TensorMesh mesh;
  Tensor coefficients;
};

void validate_tensor_fe(const TensorFE& u);

/// Multilinear interpolation of the 2^n corner values of the containing box.
/// Throws std::out_of_range outside the grid product.
double eval_tensor_fe(const TensorFE& u, const Vec& x);

/// c = sum_p outer(factors[0].col(p), ..., factors[n-1].col(p)).
struct CPFactors {
  std::vector<Mat> factors;  // axis k: (N_k + 1) x rank
  double residual = 0.0;     // Frobenius norm of the reconstruction error
  bool exact = false;        // residual at round-off level
  bool fallback = false;     // ALS missed the target; matricized factorization used

  Eigen::Index rank() const { return factors.empty() ? 0 : factors.front().cols(); }
};

Tensor reconstruct(const CPFactors& cp, const std::vector<std::size_t>& shape);

struct CPOptions {
  double target_tol = 1e-12;  // relative residual for ALS (order >= 3)
  int max_sweeps = 500;
  double min_improvement = 1e-12;
  std::uint64_t seed = 0;
};

/// Order 2: SVD, rank = #{sigma > 1e-12 sigma_max}. Order >= 3: ALS for
/// increasing rank until residual <= target_tol ||c||, falling back to the
/// exact fiber factorization of rank prod(N_k + 1) / max(N_k + 1).
CPFactors cp_decompose(const Tensor& coeffs, const CPOptions& options = {});

/// Numerical rank of a matrix by the same threshold cp_decompose uses.
Eigen::Index numerical_rank(const Mat& m);

/// Largest rank an order-n tensor of this shape can need under the
/// matricization bound (exact maximal rank for order 2).
std::size_t rank_upper_bound(const std::vector<std::size_t>& shape);

struct HatNet {
  Vec W;  // (1, ..., 1, 0)
  Vec b;  // (-t_0, ..., -t_{N-1}, 1)
  Vec w;  // combination weights
};

/// One-hidden-layer ReLU net interpolating (grid, values), piecewise linear
/// with breakpoints at the grid. Weights come from forward substitution of
/// the lower-triangular interpolation system.
HatNet compile_1d_hat(const std::vector<double>& grid, const std::vector<double>& values);

struct TnnCompileOptions {
  double target_tol = 1e-12;
  bool whole_space_rank = false;  // pad rank to rank_upper_bound(shape)
  std::uint64_t seed = 0;
};

struct TnnCompilation {
  TensorNet net;
  CPFactors cp;
};

TnnCompilation compile_tnn(const TensorFE& u, const TnnCompileOptions& options = {});

}  // namespace relufe
