#include "relufe/pwl.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "relufe/error.hpp"
#include "relufe/geometry.hpp"
#include "relufe/lp.hpp"

namespace relufe {

const char* to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::constant: return "constant";
    case FunctionKind::nodal_linear: return "nodal-linear";
    default: return "general";
  }
}

FunctionKind function_kind_from_string(const std::string& s) {
  if (s == "general") return FunctionKind::general;
  if (s == "constant") return FunctionKind::constant;
  if (s == "nodal-linear") return FunctionKind::nodal_linear;
  throw ParseError("unknown function kind '" + s + "'");
}

namespace {

PointValue eval_in_cell(const PolytopeMesh& mesh, const PiecewiseLinear& v, std::size_t c, const Vec& x) {
  PointValue out;
  out.cell = c;
  out.value = v.pieces[c].eval(x);
  out.on_boundary = mesh.cells[c].boundary_distance(x) <= 1e-12;
  return out;
}

}  // namespace

PointValue eval_pwl(const PolytopeMesh& mesh, const PiecewiseLinear& v, const Vec& x) {
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    if (mesh.cells[c].contains(x, 1e-12)) return eval_in_cell(mesh, v, c, x);
  }
  throw std::out_of_range("outside mesh");
}

PointValue eval_pwl(const PolytopeMesh& mesh, const CellLocator& locator, const PiecewiseLinear& v, const Vec& x) {
  const auto c = locator.locate(x, 1e-12);
  if (!c) throw std::out_of_range("outside mesh");
  return eval_in_cell(mesh, v, *c, x);
}

PiecewiseLinear nodal_linear(const PolytopeMesh& mesh, const std::vector<double>& nodal_values) {
  if (!mesh.is_simplicial()) throw ValidationError("nodal_linear requires a simplicial mesh with vertex lists");
  if (nodal_values.size() != mesh.vertices.size()) {
    throw ValidationError("nodal_linear: expected " + std::to_string(mesh.vertices.size()) + " nodal values, got " +
                          std::to_string(nodal_values.size()));
  }
  const Eigen::Index n = mesh.dimension;
  PiecewiseLinear f;
  f.kind = FunctionKind::nodal_linear;
  f.nodal_values = nodal_values;
  f.pieces.reserve(mesh.cells.size());
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    // [x_j^T 1] (a; c) = value_j for the n+1 vertices.
    Mat sys(n + 1, n + 1);
    Vec rhs(n + 1);
    double scale = 0.0;
    const auto& ids = mesh.cells[c].vertex_ids;
    for (Eigen::Index j = 0; j <= n; ++j) {
      const Vec& p = mesh.vertices[ids[static_cast<std::size_t>(j)]];
      sys.row(j).head(n) = p.transpose();
      sys(j, n) = 1.0;
      rhs(j) = nodal_values[ids[static_cast<std::size_t>(j)]];
      scale = std::max(scale, (p - mesh.vertices[ids[0]]).norm());
    }
    const double det = sys.determinant();
    if (!(std::abs(det) >= 1e-12 * std::pow(scale, static_cast<double>(n)))) {
      throw ValidationError("nodal_linear: degenerate simplex in cell " + std::to_string(c));
    }
    const Vec sol = sys.partialPivLu().solve(rhs);
    f.pieces.push_back({sol.head(n).transpose(), sol(n)});
  }
  return f;
}

PiecewiseLinear constant_function(const PolytopeMesh& mesh, const std::vector<double>& values) {
  if (values.size() != mesh.cells.size()) throw ValidationError("constant_function: one value per cell required");
  PiecewiseLinear f;
  f.kind = FunctionKind::constant;
  for (double v : values) f.pieces.push_back({RowVec::Zero(mesh.dimension), v});
  return f;
}

double sup_norm(const PolytopeMesh& mesh, const PiecewiseLinear& v) {
  double r = 0.0;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const AffinePiece& p = v.pieces[c];
    const Mat w = mesh.cells[c].normals();
    const Vec b = mesh.cells[c].offsets();
    const auto hi = lp::maximize_over_polytope(w, b, p.gradient.transpose());
    const auto lo = lp::maximize_over_polytope(w, b, -p.gradient.transpose());
    if (hi.status != lp::Status::optimal || lo.status != lp::Status::optimal) {
      throw ValidationError("sup_norm: LP failed on cell " + std::to_string(c) + " (empty or unbounded)");
    }
    r = std::max({r, std::abs(hi.objective + p.constant), std::abs(-lo.objective + p.constant)});
  }
  return r;
}

void validate_function(const PolytopeMesh& mesh, const PiecewiseLinear& v) {
  if (v.pieces.size() != mesh.cells.size()) {
    throw ValidationError("function has " + std::to_string(v.pieces.size()) + " pieces for " +
                          std::to_string(mesh.cells.size()) + " cells");
  }
  for (std::size_t c = 0; c < v.pieces.size(); ++c) {
    const auto& p = v.pieces[c];
    if (p.gradient.size() != mesh.dimension || !p.gradient.allFinite() || !std::isfinite(p.constant)) {
      throw ValidationError("piece " + std::to_string(c) + " has wrong dimension or non-finite entries");
    }
    if (v.kind == FunctionKind::constant && !p.gradient.isZero(0.0)) {
      throw ValidationError("constant function has nonzero gradient on cell " + std::to_string(c));
    }
  }
  if (v.kind == FunctionKind::nodal_linear && mesh.is_simplicial()) {
    // Reference value per vertex: the given nodal value, else the first cell's.
    std::vector<std::optional<double>> ref(mesh.vertices.size());
    if (v.nodal_values.size() == mesh.vertices.size()) {
      for (std::size_t id = 0; id < ref.size(); ++id) ref[id] = v.nodal_values[id];
    }
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
      for (std::size_t id : mesh.cells[c].vertex_ids) {
        const double here = v.pieces[c].eval(mesh.vertices[id]);
        if (!ref[id]) ref[id] = here;
        if (std::abs(here - *ref[id]) > 1e-9 * (1.0 + std::abs(*ref[id]))) {
          throw ValidationError("nodal-linear function is discontinuous at vertex " + std::to_string(id));
        }
      }
    }
  }
}

}  // namespace relufe
