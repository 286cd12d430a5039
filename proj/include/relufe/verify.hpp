#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "relufe/mesh.hpp"
#include "relufe/network.hpp"
#include "relufe/pwl.hpp"

namespace relufe {

struct WeakRepOptions {
  std::size_t samples = 100000;  // per region
  std::uint64_t seed = 0;
  bool compact_support = false;  // exterior target 0 and bound 2R
  std::size_t far_points = 100;  // extra exterior points at 10 * diameter
  Exec exec = Exec::parallel;
};

struct WeakRepReport {
  double R = 0.0;
  double epsilon = 0.0;
  bool compact_support = false;

  double interior_mismatch = 0.0;   // max |f - v| on the eps-shrunk cells
  double domain_sup = 0.0;          // max |f| on domain and collar samples
  double exterior_deviation = 0.0;  // max |f - target| outside the domain
  std::size_t interior_samples = 0;
  std::size_t domain_samples = 0;
  std::size_t exterior_samples = 0;

  double interior_tol = 0.0;
  double bound_limit = 0.0;
  double exterior_tol = 0.0;

  bool interior_ok() const { return interior_mismatch <= interior_tol; }
  bool bound_ok() const { return domain_sup <= bound_limit; }
  bool exterior_ok() const { return exterior_deviation <= exterior_tol; }
  bool passed() const { return interior_ok() && bound_ok() && exterior_ok(); }
};

/// Samples the eps-shrunk cells, the domain (uniform plus targeted collar
/// points) and the exterior (inflated bounding box plus far points) and
/// measures the three defining properties of a weak representation.
/// Throws VerifyError if any region yields no samples.
WeakRepReport check_weak_representation(const ReluNet2& net, const PiecewiseLinear& v, const PolytopeMesh& mesh,
                                        double epsilon, const WeakRepOptions& options = {});

struct CountCheck {
  std::size_t expected_h1 = 0;
  std::size_t expected_h2 = 0;
  std::size_t actual_h1 = 0;
  std::size_t actual_h2 = 0;
  std::size_t interior_hyperplanes = 0;
  std::size_t boundary_hyperplanes = 0;
  std::size_t cells = 0;

  bool passed() const { return expected_h1 == actual_h1 && expected_h2 == actual_h2; }
};

/// Expected sizes h1 = 2 H_i + H_b (hull facets included for compact-support
/// nets) and h2 = N_T + 1, or N_T when the net has an output bias.
CountCheck check_counts(const PolytopeMesh& mesh, const ReluNet2& net);

using BatchFn = std::function<Vec(const PointSet&)>;
using ScalarFn = std::function<double(const Vec&)>;

BatchFn batch_of(const ReluNet2& net, Exec exec = Exec::parallel);
BatchFn batch_of(const PolytopeMesh& mesh, const PiecewiseLinear& v);
BatchFn batch_of(ScalarFn f);

struct LpEstimate {
  double value = 0.0;
  double stderr_ = 0.0;  // Monte-Carlo standard error, delta method
  std::size_t samples = 0;
};

/// (vol(domain) / S * sum |f - v|^p)^(1/p) over uniform domain samples.
LpEstimate estimate_lp_error(const BatchFn& f, const BatchFn& v, const PolytopeMesh& mesh, double p,
                             std::size_t samples, std::uint64_t seed);

struct ConvergenceRow {
  int N = 0;
  std::size_t h1 = 0;
  std::size_t h2 = 0;
  std::size_t expected_h1 = 0;  // 2 n^2 N - n^2 + n
  double epsilon = 0.0;
  double error = 0.0;
  double stderr_ = 0.0;
};

struct ConvergenceTable {
  int n = 0;
  double p = 2.0;
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;  // least-squares slope of log(error) against log(N)

  bool counts_ok() const;
  std::string to_csv() const;
};

struct ConvergenceOptions {
  double epsilon_scale = 1e-3;  // epsilon = epsilon_scale / N
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
};

/// For each N: Freudenthal mesh, nodal interpolant of `target`, compiled
/// network, sampled L^p error against `target`; then the log-log slope.
ConvergenceTable convergence_experiment(const ScalarFn& target, double p, const std::vector<int>& Ns, int n,
                                        const ConvergenceOptions& options = {});

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace relufe
