#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "relufe/mesh.hpp"

namespace relufe {

struct Box {
  Vec lo;
  Vec hi;

  Vec extent() const { return hi - lo; }
  double diameter() const { return (hi - lo).norm(); }
  Box inflated(double factor) const;  // same center, extent scaled by factor
  bool contains(const Vec& x) const;
};

/// Axis-aligned bounding box of a bounded cell (2n small LPs).
/// Returns nullopt if the cell is empty or unbounded.
std::optional<Box> cell_bounding_box(const ConvexCell& cell);

Box mesh_bounding_box(const PolytopeMesh& mesh);

/// Chebyshev radius; negative or zero means empty interior.
double cell_inradius(const ConvexCell& cell);

/// Smallest inradius over all cells (the mesh scale h used for epsilon).
double min_inradius(const PolytopeMesh& mesh);

/// Vertices of a bounded cell by brute-force enumeration of n-subsets of facets.
std::vector<Vec> enumerate_vertices(const ConvexCell& cell, double tol = 1e-10);

double simplex_volume(const std::vector<Vec>& vertices);

/// Volume of one cell: determinant formula for simplices, vertex enumeration
/// plus fan triangulation for general polytopes with n <= 3.
double cell_volume(const PolytopeMesh& mesh, std::size_t cell);
double mesh_volume(const PolytopeMesh& mesh);

/// Drops halfspaces that do not support a facet.
ConvexCell remove_redundant_halfspaces(const ConvexCell& cell, double tol = 1e-10);

/// Uniform-grid bucket index over cell bounding boxes for point location.
/// Keeps a reference to the mesh, which must outlive the locator.
class CellLocator {
public:
  explicit CellLocator(const PolytopeMesh& mesh);
  CellLocator(PolytopeMesh&&) = delete;

  /// First cell (in mesh order) containing x within `tol`, if any.
  std::optional<std::size_t> locate(const Vec& x, double tol = 1e-12) const;
  /// Number of cells strictly containing x (min facet distance > tol).
  std::size_t count_strict(const Vec& x, double tol = 1e-12) const;

  const Box& bounds() const { return bounds_; }

private:
  const std::vector<std::size_t>* bucket(const Vec& x) const;

  const PolytopeMesh* mesh_;
  Box bounds_;
  std::vector<int> dims_;
  std::vector<std::vector<std::size_t>> buckets_;
};

}  // namespace relufe
