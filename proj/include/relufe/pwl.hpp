#pragma once

#include <cstddef>
#include <vector>

#include "relufe/mesh.hpp"

namespace relufe {

/// a . x + c on one cell.
struct AffinePiece {
  RowVec gradient;
  double constant = 0.0;

  double eval(const Vec& x) const { return gradient.dot(x) + constant; }
};

enum class FunctionKind { general, constant, nodal_linear };

const char* to_string(FunctionKind kind);
FunctionKind function_kind_from_string(const std::string& s);

/// Piecewise linear function on a mesh; pieces are aligned with mesh.cells.
struct PiecewiseLinear {
  FunctionKind kind = FunctionKind::general;
  std::vector<AffinePiece> pieces;
  /// Present for nodal-linear functions built from vertex values.
  std::vector<double> nodal_values;
};

struct PointValue {
  double value = 0.0;
  std::size_t cell = 0;
  bool on_boundary = false;
};

class CellLocator;

/// Value of the first cell (mesh order) whose facet inequalities hold within
/// 1e-12. Throws std::out_of_range("outside mesh") otherwise.
PointValue eval_pwl(const PolytopeMesh& mesh, const PiecewiseLinear& v, const Vec& x);
PointValue eval_pwl(const PolytopeMesh& mesh, const CellLocator& locator, const PiecewiseLinear& v, const Vec& x);

/// Per-cell interpolation of vertex values on a simplicial mesh.
PiecewiseLinear nodal_linear(const PolytopeMesh& mesh, const std::vector<double>& nodal_values);

/// Piecewise constant function, one value per cell.
PiecewiseLinear constant_function(const PolytopeMesh& mesh, const std::vector<double>& values);

/// max over cells of |a x + c| on the cell, by two LPs per cell.
double sup_norm(const PolytopeMesh& mesh, const PiecewiseLinear& v);

/// Checks pieces length, gradient finiteness, zero gradients for constant
/// functions and continuity across shared simplex vertices for nodal-linear
/// ones. Throws ValidationError.
void validate_function(const PolytopeMesh& mesh, const PiecewiseLinear& v);

}  // namespace relufe
