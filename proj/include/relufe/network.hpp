#pragma once

#include <Eigen/Sparse>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "relufe/types.hpp"

namespace relufe {

using SparseRowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Build record carried by compiled networks.
struct Provenance {
  std::string mesh_hash;
  double epsilon = 0.0;
  double R = 0.0;
  std::vector<double> t0;  // per cell, in mesh order
  bool compact_support = false;
  std::size_t cells = 0;
  std::size_t interior_hyperplanes = 0;
  std::size_t boundary_hyperplanes = 0;
};

/// f(x) = w3 relu(W2 relu(W1 x + b1) + b2) [+ output_bias]
struct ReluNet2 {
  Mat W1;           // h1 x n
  Vec b1;           // h1
  SparseRowMat W2;  // h2 x h1
  Vec b2;           // h2
  RowVec w3;        // 1 x h2
  std::optional<double> output_bias;
  std::optional<Provenance> provenance;

  Eigen::Index input_dim() const { return W1.cols(); }
  Eigen::Index h1() const { return W1.rows(); }
  Eigen::Index h2() const { return W2.rows(); }
};

/// Throws ValidationError on inconsistent shapes or non-finite entries.
void validate_network(const ReluNet2& net);

double fnn_forward(const ReluNet2& net, const Vec& x);

/// Values at every column of `points`. The serial path is the reference
/// implementation; the parallel path is an OpenMP loop over points.
Vec fnn_forward_batch(const ReluNet2& net, const PointSet& points, Exec exec = Exec::parallel);

/// One axis of a tensor network: hidden layer relu(W x_k + b) of width h and
/// one combination row per rank term.
struct TensorBranch {
  Vec W;        // h (input is scalar)
  Vec b;        // h
  Mat weights;  // rank x h

  Eigen::Index width() const { return W.size(); }
};

/// t(x) = sum_p prod_k weights_k.row(p) . relu(W_k x_k + b_k)
struct TensorNet {
  std::vector<TensorBranch> branches;

  Eigen::Index rank() const { return branches.empty() ? 0 : branches.front().weights.rows(); }
  std::size_t axis_count() const { return branches.size(); }
};

void validate_tensor_net(const TensorNet& net);

double tnn_forward(const TensorNet& net, const Vec& x);
Vec tnn_forward_batch(const TensorNet& net, const PointSet& points, Exec exec = Exec::parallel);

}  // namespace relufe
