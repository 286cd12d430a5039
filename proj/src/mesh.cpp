#include "relufe/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <omp.h>

#include "relufe/error.hpp"
#include "relufe/geometry.hpp"
#include "relufe/lp.hpp"
#include "relufe/sampling.hpp"

namespace relufe {

Mat ConvexCell::normals() const {
  Mat w(static_cast<Eigen::Index>(halfspaces.size()), dimension());
  for (std::size_t i = 0; i < halfspaces.size(); ++i) w.row(static_cast<Eigen::Index>(i)) = halfspaces[i].normal;
  return w;
}

Vec ConvexCell::offsets() const {
  Vec b(static_cast<Eigen::Index>(halfspaces.size()));
  for (std::size_t i = 0; i < halfspaces.size(); ++i) b(static_cast<Eigen::Index>(i)) = halfspaces[i].offset;
  return b;
}

double ConvexCell::boundary_distance(const Vec& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& h : halfspaces) d = std::min(d, h.distance(x));
  return d;
}

bool ConvexCell::contains(const Vec& x, double tol) const {
  for (const auto& h : halfspaces) {
    if (h.distance(x) < -tol) return false;
  }
  return true;
}

ConvexCell simplex_cell(const std::vector<Vec>& vertices) {
  if (vertices.empty()) throw ValidationError("simplex with no vertices");
  const Eigen::Index n = vertices.front().size();
  if (static_cast<Eigen::Index>(vertices.size()) != n + 1) {
    throw ValidationError("simplex in dimension " + std::to_string(n) + " needs " + std::to_string(n + 1) +
                          " vertices, got " + std::to_string(vertices.size()));
  }
  Mat edges(n, n);
  double scale = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    edges.col(k) = vertices[static_cast<std::size_t>(k + 1)] - vertices[0];
    scale = std::max(scale, edges.col(k).norm());
  }
  Eigen::PartialPivLU<Mat> lu(edges);
  const double det = edges.determinant();
  if (!(std::abs(det) > 1e-12 * std::pow(scale, static_cast<double>(n)))) {
    throw ValidationError("degenerate simplex (|det| = " + std::to_string(std::abs(det)) + ")");
  }
  // Barycentric coordinates are affine and nonnegative exactly on the simplex:
  // lambda_k(x) = (T^{-1}(x - v0))_k for k >= 1, lambda_0 = 1 - sum_k lambda_k.
  const Mat inv = lu.inverse();
  ConvexCell cell;
  cell.halfspaces.resize(static_cast<std::size_t>(n + 1));
  const RowVec colsum = inv.colwise().sum();
  cell.halfspaces[0] = Halfspace{-colsum, 1.0 + colsum.dot(vertices[0])};
  for (Eigen::Index k = 0; k < n; ++k) {
    Halfspace h{inv.row(k), -inv.row(k).dot(vertices[0])};
    cell.halfspaces[static_cast<std::size_t>(k + 1)] = h;
  }
  for (auto& h : cell.halfspaces) {
    const double norm = h.normal.norm();
    h.normal /= norm;
    h.offset /= norm;
  }
  return cell;
}

bool PolytopeMesh::is_simplicial() const {
  return !cells.empty() && std::all_of(cells.begin(), cells.end(), [&](const ConvexCell& c) {
    return c.vertex_ids.size() == static_cast<std::size_t>(dimension + 1);
  });
}

std::vector<Vec> PolytopeMesh::cell_vertices(std::size_t cell) const {
  std::vector<Vec> out;
  out.reserve(cells[cell].vertex_ids.size());
  for (std::size_t id : cells[cell].vertex_ids) out.push_back(vertices.at(id));
  return out;
}

// ---------------------------------------------------------------------------
// Registry

namespace {
constexpr double kQuantum = 1e-6;
}

std::size_t HyperplaneRegistry::KeyHash::operator()(const Key& k) const noexcept {
  std::size_t h = 1469598103934665603ULL;
  for (auto v : k) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

HyperplaneRegistry::Key HyperplaneRegistry::quantize(const RowVec& n, double b) const {
  Key k(static_cast<std::size_t>(n.size() + 1));
  for (Eigen::Index i = 0; i < n.size(); ++i) k[static_cast<std::size_t>(i)] = std::llround(n(i) / kQuantum);
  k.back() = std::llround(b / kQuantum);
  return k;
}

bool HyperplaneRegistry::matches(std::size_t i, const RowVec& n, double b) const {
  const auto& e = entries_[i];
  return (e.normal - n).cwiseAbs().maxCoeff() <= kMergeTol && std::abs(e.offset - b) <= kMergeTol;
}

std::optional<std::size_t> HyperplaneRegistry::find(const RowVec& unit_normal, double unit_offset) const {
  // Values within kMergeTol of a rounding boundary may land in the neighbouring
  // bucket; probe every such combination.
  std::vector<double> comps(unit_normal.data(), unit_normal.data() + unit_normal.size());
  comps.push_back(unit_offset);
  const Key base = quantize(unit_normal, unit_offset);
  std::vector<std::pair<std::size_t, std::int64_t>> alternates;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const double scaled = comps[i] / kQuantum;
    const double frac = scaled - std::floor(scaled);
    if (std::abs(frac - 0.5) * kQuantum <= 2.0 * kMergeTol) {
      alternates.emplace_back(i, base[i] == static_cast<std::int64_t>(std::floor(scaled)) ? base[i] + 1 : base[i] - 1);
    }
  }
  const std::size_t combos = std::size_t{1} << alternates.size();
  for (std::size_t mask = 0; mask < combos; ++mask) {
    Key key = base;
    for (std::size_t a = 0; a < alternates.size(); ++a) {
      if (mask & (std::size_t{1} << a)) key[alternates[a].first] = alternates[a].second;
    }
    auto it = buckets_.find(key);
    if (it == buckets_.end()) continue;
    for (std::size_t idx : it->second) {
      if (matches(idx, unit_normal, unit_offset)) return idx;
    }
  }
  return std::nullopt;
}

FacetRef HyperplaneRegistry::add(const Halfspace& h) {
  const double norm = h.normal.norm();
  if (!(norm > 0.0)) throw ValidationError("halfspace with zero normal");
  const RowVec n = h.normal / norm;
  const double b = h.offset / norm;
  if (auto found = find(n, b)) return {*found, norm};
  entries_.push_back(Halfspace{n, b});
  buckets_[quantize(n, b)].push_back(entries_.size() - 1);
  return {entries_.size() - 1, norm};
}

bool HyperplaneRegistry::is_interior(std::size_t i) const {
  return find(-entries_[i].normal, -entries_[i].offset).has_value();
}

std::size_t HyperplaneRegistry::interior_count() const {
  std::size_t both = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) both += is_interior(i) ? 1 : 0;
  return both / 2;
}

std::size_t HyperplaneRegistry::boundary_count() const {
  std::size_t single = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) single += is_interior(i) ? 0 : 1;
  return single;
}

HyperplaneRegistry build_registry(const PolytopeMesh& mesh) {
  HyperplaneRegistry reg(mesh.dimension);
  auto& refs = reg.facet_refs();
  refs.resize(mesh.cells.size());
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    for (const auto& h : mesh.cells[c].halfspaces) refs[c].push_back(reg.add(h));
  }
  return reg;
}

// ---------------------------------------------------------------------------

ConvexCell shrink_cell(const ConvexCell& cell, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("shrink_cell: epsilon must be >= 0");
  ConvexCell out = cell;
  for (auto& h : out.halfspaces) h.offset -= epsilon * h.normal.norm();
  return out;
}

ValidationReport validate_mesh(const PolytopeMesh& mesh, std::size_t samples, std::uint64_t seed) {
  if (mesh.cells.empty()) throw ValidationError("mesh has no cells");
  if (samples < 1) throw std::invalid_argument("validate_mesh: samples must be >= 1");
  const int n = mesh.dimension;

  ValidationReport report;
  report.cells = mesh.cells.size();
  report.inradius.resize(mesh.cells.size());
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const ConvexCell& cell = mesh.cells[c];
    const std::string name = "cell " + std::to_string(c);
    if (cell.dimension() != n) throw ValidationError(name + ": dimension mismatch");
    if (cell.facet_count() < static_cast<std::size_t>(n + 1)) {
      throw ValidationError(name + ": needs at least n+1 halfspaces");
    }
    for (const auto& h : cell.halfspaces) {
      if (!(h.normal.norm() > 0.0) || !h.normal.allFinite() || !std::isfinite(h.offset)) {
        throw ValidationError(name + ": zero or non-finite halfspace");
      }
    }
    HyperplaneRegistry local(n);
    for (const auto& h : cell.halfspaces) {
      const std::size_t before = local.size();
      local.add(h);
      if (local.size() == before) throw ValidationError(name + ": duplicate halfspace (positive multiple)");
    }
    const auto box = cell_bounding_box(cell);
    if (!box) throw ValidationError(name + " is unbounded or empty");
    const double r = cell_inradius(cell);
    report.inradius[c] = r;
    if (!(r > 1e-10 * std::max(1.0, box->diameter()))) throw ValidationError(name + " has empty interior");
  }
  if (mesh.domain_hull) {
    if (!cell_bounding_box(*mesh.domain_hull)) throw ValidationError("domain hull is unbounded or empty");
  }

  const CellLocator locator(mesh);
  const Box bounds = mesh.domain_hull ? *cell_bounding_box(*mesh.domain_hull) : locator.bounds();
  const PointSet pts = uniform_box_points(bounds.lo, bounds.hi, samples, seed, 0x7a11);
  report.samples = samples;
  std::size_t overlap = 0, gap = 0;
#pragma omp parallel for reduction(+ : overlap, gap)
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const Vec x = pts.col(i);
    const std::size_t inside = locator.count_strict(x);
    if (inside >= 2) ++overlap;
    if (mesh.domain_hull && inside == 0 && mesh.domain_hull->boundary_distance(x) > 1e-12 &&
        !locator.locate(x, 1e-12)) {
      ++gap;
    }
  }
  report.overlap_hits = overlap;
  report.gap_hits = gap;
  if (overlap > 0) {
    report.issues.push_back("overlap: " + std::to_string(overlap) + " of " + std::to_string(samples) +
                            " samples lie in the interior of two or more cells");
  }
  if (gap > 0) {
    report.issues.push_back("coverage: " + std::to_string(gap) + " of " + std::to_string(samples) +
                            " hull samples lie in no cell");
  }
  return report;
}

// ---------------------------------------------------------------------------

PolytopeMesh freudenthal_mesh(int n, int N) {
  if (n < 1 || N < 1) throw std::invalid_argument("freudenthal_mesh: n and N must be >= 1");
  PolytopeMesh mesh;
  mesh.dimension = n;
  auto coord = [N](long k) { return static_cast<double>(k) / static_cast<double>(N); };

  const std::size_t side = static_cast<std::size_t>(N) + 1;
  std::size_t total = 1;
  for (int k = 0; k < n; ++k) total *= side;
  mesh.vertices.reserve(total);
  std::vector<int> z(static_cast<std::size_t>(n), 0);
  for (std::size_t id = 0; id < total; ++id) {
    Vec v(n);
    std::size_t rest = id;
    for (int k = 0; k < n; ++k) {
      v(k) = coord(static_cast<long>(rest % side));
      rest /= side;
    }
    mesh.vertices.push_back(v);
  }
  auto vertex_id = [&](const std::vector<int>& g) {
    std::size_t id = 0, stride = 1;
    for (int k = 0; k < n; ++k) {
      id += static_cast<std::size_t>(g[static_cast<std::size_t>(k)]) * stride;
      stride *= side;
    }
    return id;
  };

  std::size_t cubes = 1;
  for (int k = 0; k < n; ++k) cubes *= static_cast<std::size_t>(N);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (std::size_t cube = 0; cube < cubes; ++cube) {
    std::size_t rest = cube;
    for (int k = 0; k < n; ++k) {
      z[static_cast<std::size_t>(k)] = static_cast<int>(rest % static_cast<std::size_t>(N));
      rest /= static_cast<std::size_t>(N);
    }
    std::iota(perm.begin(), perm.end(), 0);
    do {
      // Simplex {1 >= y_p1 >= y_p2 >= ... >= y_pn >= 0}, y = N x - z.
      ConvexCell cell;
      const int first = perm.front();
      RowVec w = RowVec::Zero(n);
      w(first) = -1.0;
      cell.halfspaces.push_back({w, coord(z[static_cast<std::size_t>(first)] + 1)});
      for (int k = 0; k + 1 < n; ++k) {
        const int a = perm[static_cast<std::size_t>(k)];
        const int b = perm[static_cast<std::size_t>(k + 1)];
        RowVec d = RowVec::Zero(n);
        d(a) = 1.0;
        d(b) = -1.0;
        cell.halfspaces.push_back({d, -coord(z[static_cast<std::size_t>(a)] - z[static_cast<std::size_t>(b)])});
      }
      const int last = perm.back();
      RowVec l = RowVec::Zero(n);
      l(last) = 1.0;
      cell.halfspaces.push_back({l, -coord(z[static_cast<std::size_t>(last)])});

      std::vector<int> g = z;
      cell.vertex_ids.push_back(vertex_id(g));
      for (int k = 0; k < n; ++k) {
        g[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] += 1;
        cell.vertex_ids.push_back(vertex_id(g));
      }
      mesh.cells.push_back(std::move(cell));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  ConvexCell hull;
  for (int k = 0; k < n; ++k) {
    RowVec e = RowVec::Zero(n);
    e(k) = 1.0;
    hull.halfspaces.push_back({e, 0.0});
    hull.halfspaces.push_back({-e, 1.0});
  }
  mesh.domain_hull = hull;
  return mesh;
}

CellSamples sample_shrunk_domain(const PolytopeMesh& mesh, double epsilon, std::size_t count,
                                 std::uint64_t seed, Exec exec) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("sample_shrunk_domain: epsilon must be > 0");
  if (count < 1) throw std::invalid_argument("sample_shrunk_domain: count must be >= 1");
  const std::size_t cells = mesh.cells.size();
  const Eigen::Index n = mesh.dimension;

  std::vector<std::optional<Box>> boxes(cells);
  std::vector<ConvexCell> shrunk(cells);
  const bool parallel = exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::size_t c = 0; c < cells; ++c) {
    shrunk[c] = shrink_cell(mesh.cells[c], epsilon);
    if (cell_inradius(shrunk[c]) > 0.0) boxes[c] = cell_bounding_box(shrunk[c]);
  }
  std::vector<std::size_t> active;
  for (std::size_t c = 0; c < cells; ++c) {
    if (boxes[c]) active.push_back(c);
  }
  if (active.empty()) throw std::invalid_argument("epsilon too large: every shrunk cell is empty");

  const std::size_t base = count / active.size();
  const std::size_t extra = count % active.size();
  std::vector<std::vector<Vec>> per_cell(active.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::size_t a = 0; a < active.size(); ++a) {
    const std::size_t c = active[a];
    const std::size_t want = base + (a < extra ? 1 : 0);
    auto rng = chunk_rng(seed, 0x5a3b, c);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Box& box = *boxes[c];
    const std::size_t max_tries = 2000 * want + 10000;
    auto& out = per_cell[a];
    out.reserve(want);
    for (std::size_t tries = 0; out.size() < want && tries < max_tries; ++tries) {
      Vec x(n);
      for (Eigen::Index k = 0; k < n; ++k) x(k) = box.lo(k) + (box.hi(k) - box.lo(k)) * unit(rng);
      if (mesh.cells[c].boundary_distance(x) >= epsilon) out.push_back(std::move(x));
    }
  }

  CellSamples result;
  std::size_t total = 0;
  for (const auto& v : per_cell) total += v.size();
  result.points.resize(n, static_cast<Eigen::Index>(total));
  result.cell.reserve(total);
  Eigen::Index col = 0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (const auto& x : per_cell[a]) {
      result.points.col(col++) = x;
      result.cell.push_back(active[a]);
    }
  }
  return result;
}

}  // namespace relufe
