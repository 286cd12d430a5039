#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "relufe/mesh.hpp"
#include "relufe/pwl.hpp"

namespace relufe::testkit {

ConvexCell box_cell(const Vec& lo, const Vec& hi);
ConvexCell interval(double a, double b);
ConvexCell unit_square();

/// [0,1] split at the given interior breakpoints, simplicial, hull attached.
PolytopeMesh interval_mesh(const std::vector<double>& nodes);
PolytopeMesh single_cell_mesh(const ConvexCell& cell);

/// Freudenthal mesh with interior vertices moved by up to `jitter` / N per axis.
PolytopeMesh jittered_freudenthal(int n, int N, double jitter, std::mt19937_64& rng);

/// Unit square cut `cuts` times by random lines into convex polygons.
PolytopeMesh random_polygon_mesh(int cuts, std::mt19937_64& rng);

/// Pentagon plus a collinear boundary vertex, fan-triangulated and refined by
/// seven interior point insertions: 18 triangles, 24 interior and 5 boundary lines.
PolytopeMesh pentagon_mesh();

/// Bounded polytope from m random halfspaces around the origin, normals with
/// norms in [0.5, 2]. Retries until bounded.
ConvexCell random_polytope(int n, int m, std::mt19937_64& rng);

PiecewiseLinear random_nodal(const PolytopeMesh& mesh, std::mt19937_64& rng);
PiecewiseLinear random_constant(const PolytopeMesh& mesh, std::mt19937_64& rng);

/// Smallest cell inradius.
double mesh_h(const PolytopeMesh& mesh);

}  // namespace relufe::testkit
