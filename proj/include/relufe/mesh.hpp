#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "relufe/types.hpp"

namespace relufe {

/// {x : normal . x + offset >= 0}
struct Halfspace {
  RowVec normal;
  double offset = 0.0;

  double eval(const Vec& x) const { return normal.dot(x) + offset; }
  double distance(const Vec& x) const { return eval(x) / normal.norm(); }
};

/// Closed convex polytope in H-representation. Simplex cells additionally
/// carry the indices of their n+1 vertices in the owning mesh's vertex table.
struct ConvexCell {
  std::vector<Halfspace> halfspaces;
  std::vector<std::size_t> vertex_ids;

  std::size_t facet_count() const { return halfspaces.size(); }
  Eigen::Index dimension() const { return halfspaces.empty() ? 0 : halfspaces.front().normal.size(); }

  /// Stacked normals (m x n) and offsets (m).
  Mat normals() const;
  Vec offsets() const;

  /// min_i (w_i x + b_i) / |w_i|; equals d(x, boundary) for interior x.
  double boundary_distance(const Vec& x) const;
  bool contains(const Vec& x, double tol = 1e-12) const;
};

/// Inward-facing unit-normal halfspaces of the simplex with the given vertices.
/// Throws ValidationError for a degenerate simplex.
ConvexCell simplex_cell(const std::vector<Vec>& vertices);

struct PolytopeMesh {
  int dimension = 0;
  std::vector<ConvexCell> cells;
  /// Shared vertex table, populated for simplicial meshes.
  std::vector<Vec> vertices;
  /// Convex hull of the domain; required only for compact-support compilation.
  std::optional<ConvexCell> domain_hull;

  std::size_t cell_count() const { return cells.size(); }
  bool is_simplicial() const;
  std::vector<Vec> cell_vertices(std::size_t cell) const;
};

/// Reference from one cell facet to its canonical directed hyperplane. The
/// original halfspace equals `scale` times the canonical one.
struct FacetRef {
  std::size_t entry = 0;
  double scale = 1.0;
};

/// Deduplicated directed hyperplanes of a mesh. Facets merge when one is a
/// positive multiple of another, tested on the unit-normal canonical form.
class HyperplaneRegistry {
public:
  static constexpr double kMergeTol = 1e-9;

  explicit HyperplaneRegistry(int dimension = 0) : dimension_(dimension) {}

  /// Registers one halfspace and returns its canonical entry and scale.
  FacetRef add(const Halfspace& h);

  /// Looks up an existing entry for the directed hyperplane, if any.
  std::optional<std::size_t> find(const RowVec& unit_normal, double unit_offset) const;

  const Halfspace& entry(std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }

  /// Number of undirected hyperplanes seen with both orientations.
  std::size_t interior_count() const;
  /// Number of undirected hyperplanes seen with a single orientation.
  std::size_t boundary_count() const;
  /// Whether entry i's opposite orientation is also registered.
  bool is_interior(std::size_t i) const;

  /// facet_refs()[cell][k] for the k-th halfspace of each mesh cell.
  const std::vector<std::vector<FacetRef>>& facet_refs() const { return facet_refs_; }
  std::vector<std::vector<FacetRef>>& facet_refs() { return facet_refs_; }

private:
  using Key = std::vector<std::int64_t>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  Key quantize(const RowVec& n, double b) const;
  bool matches(std::size_t i, const RowVec& n, double b) const;

  int dimension_;
  std::vector<Halfspace> entries_;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets_;
  std::vector<std::vector<FacetRef>> facet_refs_;
};

HyperplaneRegistry build_registry(const PolytopeMesh& mesh);

struct ValidationReport {
  std::size_t cells = 0;
  std::size_t samples = 0;
  std::vector<double> inradius;
  std::size_t overlap_hits = 0;  // samples strictly inside two or more cells
  std::size_t gap_hits = 0;      // samples inside the domain hull but in no cell
  std::vector<std::string> issues;

  bool ok() const { return issues.empty(); }
  double overlap_fraction() const { return samples ? double(overlap_hits) / double(samples) : 0.0; }
  double gap_fraction() const { return samples ? double(gap_hits) / double(samples) : 0.0; }
};

/// Checks boundedness and nonempty interior of every cell (hard errors,
/// thrown as ValidationError) and estimates overlap / coverage by uniform
/// sampling of the domain bounding box (reported in `issues`).
ValidationReport validate_mesh(const PolytopeMesh& mesh, std::size_t samples = 100000,
                               std::uint64_t seed = 0);

/// Offsets b_i -> b_i - eps |w_i|. May yield an empty cell for large eps.
ConvexCell shrink_cell(const ConvexCell& cell, double epsilon);

/// Kuhn/Freudenthal triangulation of [0,1]^n with step 1/N.
PolytopeMesh freudenthal_mesh(int n, int N);

struct CellSamples {
  PointSet points;  // n x count
  std::vector<std::size_t> cell;
};

/// Uniform rejection samples of each cell's eps-shrunk interior. `count` is the
/// total, split evenly over cells whose shrunk interior is nonempty.
/// Throws std::invalid_argument("epsilon too large") if every shrunk cell is empty.
CellSamples sample_shrunk_domain(const PolytopeMesh& mesh, double epsilon, std::size_t count,
                                 std::uint64_t seed, Exec exec = Exec::parallel);

}  // namespace relufe
