#include "relufe/network.hpp"

#include <cmath>

#include "relufe/error.hpp"

namespace relufe {

void validate_network(const ReluNet2& net) {
  const auto h1 = net.W1.rows();
  const auto h2 = net.W2.rows();
  if (h1 < 1 || h2 < 1) throw ValidationError("network: hidden layers must be nonempty");
  if (net.b1.size() != h1) throw ValidationError("network: b1 length does not match W1 rows");
  if (net.W2.cols() != h1) throw ValidationError("network: W2 columns do not match h1");
  if (net.b2.size() != h2) throw ValidationError("network: b2 length does not match W2 rows");
  if (net.w3.size() != h2) throw ValidationError("network: w3 length does not match h2");
  if (!net.W1.allFinite() || !net.b1.allFinite() || !net.b2.allFinite() || !net.w3.allFinite()) {
    throw ValidationError("network: non-finite dense weights");
  }
  for (Eigen::Index r = 0; r < net.W2.outerSize(); ++r) {
    for (SparseRowMat::InnerIterator it(net.W2, r); it; ++it) {
      if (!std::isfinite(it.value())) throw ValidationError("network: non-finite W2 entry");
    }
  }
  if (net.output_bias && !std::isfinite(*net.output_bias)) throw ValidationError("network: non-finite output bias");
}

namespace {

double forward_with(const ReluNet2& net, const Eigen::Ref<const Vec>& x, Vec& hidden1) {
  hidden1.noalias() = net.W1 * x;
  hidden1 += net.b1;
  hidden1 = hidden1.cwiseMax(0.0);
  double out = 0.0;
  for (Eigen::Index r = 0; r < net.W2.outerSize(); ++r) {
    double acc = net.b2(r);
    for (SparseRowMat::InnerIterator it(net.W2, r); it; ++it) acc += it.value() * hidden1(it.col());
    out += net.w3(r) * relu(acc);
  }
  if (net.output_bias) out += *net.output_bias;
  return out;
}

void check_dim(Eigen::Index expected, Eigen::Index got) {
  if (expected != got) {
    throw std::invalid_argument("dimension mismatch: network expects " + std::to_string(expected) +
                                " inputs, point has " + std::to_string(got));
  }
}

}  // namespace

double fnn_forward(const ReluNet2& net, const Vec& x) {
  check_dim(net.input_dim(), x.size());
  Vec hidden1(net.h1());
  return forward_with(net, x, hidden1);
}

Vec fnn_forward_batch(const ReluNet2& net, const PointSet& points, Exec exec) {
  check_dim(net.input_dim(), points.rows());
  Vec out(points.cols());
  if (exec == Exec::serial) {
    Vec hidden1(net.h1());
    for (Eigen::Index i = 0; i < points.cols(); ++i) out(i) = forward_with(net, points.col(i), hidden1);
    return out;
  }
#pragma omp parallel
  {
    Vec hidden1(net.h1());
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < points.cols(); ++i) out(i) = forward_with(net, points.col(i), hidden1);
  }
  return out;
}

void validate_tensor_net(const TensorNet& net) {
  if (net.branches.empty()) throw ValidationError("tensor network has no branches");
  const auto rank = net.rank();
  if (rank < 1) throw ValidationError("tensor network rank must be >= 1");
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    const std::string name = "branch_" + std::to_string(k + 1);
    if (br.width() < 1) throw ValidationError(name + ": width must be >= 1");
    if (br.b.size() != br.width() || br.weights.cols() != br.width()) {
      throw ValidationError(name + ": W, b and weights widths disagree");
    }
    if (br.weights.rows() != rank) throw ValidationError(name + ": rank differs from branch_1");
    if (!br.W.allFinite() || !br.b.allFinite() || !br.weights.allFinite()) {
      throw ValidationError(name + ": non-finite entries");
    }
  }
}

namespace {

double tnn_at(const TensorNet& net, const Eigen::Ref<const Vec>& x, Vec& hidden, Vec& terms) {
  terms.setOnes();
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    hidden = (br.W * x(static_cast<Eigen::Index>(k)) + br.b).cwiseMax(0.0);
    terms.array() *= (br.weights * hidden).array();
  }
  return terms.sum();
}

}  // namespace

double tnn_forward(const TensorNet& net, const Vec& x) {
  check_dim(static_cast<Eigen::Index>(net.axis_count()), x.size());
  Vec hidden, terms(net.rank());
  return tnn_at(net, x, hidden, terms);
}

Vec tnn_forward_batch(const TensorNet& net, const PointSet& points, Exec exec) {
  check_dim(static_cast<Eigen::Index>(net.axis_count()), points.rows());
  Vec out(points.cols());
  if (exec == Exec::serial) {
    Vec hidden, terms(net.rank());
    for (Eigen::Index i = 0; i < points.cols(); ++i) out(i) = tnn_at(net, points.col(i), hidden, terms);
    return out;
  }
#pragma omp parallel
  {
    Vec hidden, terms(net.rank());
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < points.cols(); ++i) out(i) = tnn_at(net, points.col(i), hidden, terms);
  }
  return out;
}

}  // namespace relufe
