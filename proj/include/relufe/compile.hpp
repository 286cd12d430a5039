#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "relufe/mesh.hpp"
#include "relufe/network.hpp"
#include "relufe/pwl.hpp"

namespace relufe {

/// Strictly positive lambda with sum_i lambda_i w_i = 0 for a bounded cell,
/// fixed as the minimizer of sum(lambda) subject to lambda >= 1.
/// Throws CompileError if no such combination exists (unbounded cell).
Vec positive_normal_combination(const ConvexCell& cell);

/// Minimum-norm mu with sum_i mu_i w_i^T = -a^T.
/// Throws CompileError if the facet normals do not span R^n.
Vec solve_mu(const ConvexCell& cell, const RowVec& gradient);

struct Shift {
  double s = 0.0;   // makes every mu_i + s lambda_i positive
  double t0 = 0.0;  // shift that silences the bump outside the cell
};

/// s = max|mu_i / lambda_i| + 1 and
/// t0 = max((|sum (mu_i + s lambda_i) b_i + c + R| + sum eps |mu_i||w_i|) / min eps lambda_i |w_i|, s + 1).
Shift shift_t0(const ConvexCell& cell, const Vec& mu, const Vec& lambda, double c, double R, double epsilon);

/// Multiplier applied to t0 so the exterior inequality survives rounding.
inline constexpr double kT0Safety = 1.0 + 1e-9;
/// Second-layer weights beyond this magnitude raise a conditioning warning.
inline constexpr double kConditioningLimit = 1e12;

/// relu(w_II relu(W_I x + b_I) + b_II): equals v + R on the eps-shrunk cell,
/// stays within [0, 2R] on the collar and vanishes outside the cell.
struct CellBump {
  Mat W_I;      // m x n
  Vec b_I;      // m
  RowVec w_II;  // 1 x m
  double b_II = 0.0;

  std::size_t cell = 0;
  double s = 0.0;
  double t0 = 0.0;  // after the safety factor
  Vec mu;
  Vec lambda;

  double eval(const Vec& x) const;
};

CellBump compile_cell_bump(const ConvexCell& cell, const AffinePiece& piece, double R, double epsilon,
                           std::size_t cell_index = 0);

/// First-layer neurons in cell order, before deduplication, each tagged with
/// the directed hyperplane it came from.
struct UnmergedNet {
  ReluNet2 net;
  std::vector<FacetRef> tags;
};

/// Collapses neurons that share a directed hyperplane into one neuron per
/// registry entry and rescales the consuming second-layer weights so the
/// network function is unchanged. The kept row is the entry's first facet
/// scaled by a power of two to norm in [1, 2).
ReluNet2 merge_duplicate_neurons(const UnmergedNet& unmerged, const HyperplaneRegistry& registry);

struct CompileOptions {
  double epsilon = 0.0;
  bool output_bias = false;  // drop the constant second-layer neuron for an output bias
  Exec exec = Exec::parallel;
};

struct Compilation {
  ReluNet2 net;
  UnmergedNet unmerged;
  HyperplaneRegistry registry;
  std::vector<CellBump> bumps;
  double R = 0.0;
  std::vector<std::string> warnings;
};

/// Two-hidden-layer network f = -R + sum_cells bump_cell, so that f = v on
/// the eps-shrunk cells, |f| <= R on the domain and f = -R outside it.
/// Sizes: h1 = 2 H_i + H_b, h2 = N_T + 1 (N_T with an output bias).
Compilation compile_weak_representation(const PolytopeMesh& mesh, const PiecewiseLinear& v,
                                         const CompileOptions& options);

/// Variant with the constant neuron replaced by a hull bump, so that f = v on
/// the eps-shrunk cells, |f| <= 2R on the domain and f = 0 outside it.
/// Requires mesh.domain_hull.
Compilation compile_compact_support(const PolytopeMesh& mesh, const PiecewiseLinear& v, double epsilon,
                                    Exec exec = Exec::parallel);

/// Stable content hash of a mesh (FNV-1a over the raw numeric data).
std::string mesh_fingerprint(const PolytopeMesh& mesh);

}  // namespace relufe
