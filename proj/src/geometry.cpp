#include "relufe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "relufe/lp.hpp"

namespace relufe {

Box Box::inflated(double factor) const {
  const Vec center = 0.5 * (lo + hi);
  const Vec half = 0.5 * factor * (hi - lo);
  return {center - half, center + half};
}

bool Box::contains(const Vec& x) const {
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

std::optional<Box> cell_bounding_box(const ConvexCell& cell) {
  const Eigen::Index n = cell.dimension();
  const Mat w = cell.normals();
  const Vec b = cell.offsets();
  Box box{Vec(n), Vec(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e(k) = 1.0;
    const auto hi = lp::maximize_over_polytope(w, b, e);
    if (hi.status != lp::Status::optimal) return std::nullopt;
    const auto lo = lp::maximize_over_polytope(w, b, -e);
    if (lo.status != lp::Status::optimal) return std::nullopt;
    box.hi(k) = hi.objective;
    box.lo(k) = -lo.objective;
  }
  return box;
}

Box mesh_bounding_box(const PolytopeMesh& mesh) {
  const Eigen::Index n = mesh.dimension;
  Box box{Vec::Constant(n, std::numeric_limits<double>::infinity()),
          Vec::Constant(n, -std::numeric_limits<double>::infinity())};
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    if (mesh.cells[c].vertex_ids.size() == static_cast<std::size_t>(n + 1)) {
      for (std::size_t id : mesh.cells[c].vertex_ids) {
        box.lo = box.lo.cwiseMin(mesh.vertices[id]);
        box.hi = box.hi.cwiseMax(mesh.vertices[id]);
      }
    } else if (auto b = cell_bounding_box(mesh.cells[c])) {
      box.lo = box.lo.cwiseMin(b->lo);
      box.hi = box.hi.cwiseMax(b->hi);
    }
  }
  return box;
}

double cell_inradius(const ConvexCell& cell) {
  const auto ball = lp::chebyshev_center(cell.normals(), cell.offsets());
  if (ball.status == lp::Status::infeasible) return -1.0;
  return ball.radius;
}

double min_inradius(const PolytopeMesh& mesh) {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& c : mesh.cells) r = std::min(r, cell_inradius(c));
  return r;
}

namespace {

template <class F>
void for_each_subset(std::size_t m, std::size_t k, F&& f) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  if (k > m) return;
  for (;;) {
    f(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Sorts points lying in a common plane by angle around their centroid.
std::vector<Vec> sort_in_plane(std::vector<Vec> pts, const Vec& normal) {
  const Eigen::Index n = normal.size();
  Vec centroid = Vec::Zero(n);
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Vec u, v;
  if (n == 2) {
    u = Vec::Unit(2, 0);
    v = Vec::Unit(2, 1);
  } else {
    Eigen::Vector3d nn = normal.normalized();
    Eigen::Vector3d a = std::abs(nn(0)) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    Eigen::Vector3d uu = nn.cross(a).normalized();
    u = uu;
    v = nn.cross(uu);
  }
  std::vector<std::pair<double, Vec>> keyed;
  for (auto& p : pts) keyed.emplace_back(std::atan2((p - centroid).dot(v), (p - centroid).dot(u)), p);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Vec> out;
  for (auto& [_, p] : keyed) out.push_back(p);
  return out;
}

}  // namespace

std::vector<Vec> enumerate_vertices(const ConvexCell& cell, double tol) {
  const auto n = static_cast<std::size_t>(cell.dimension());
  const Mat w = cell.normals();
  const Vec b = cell.offsets();
  std::vector<Vec> verts;
  for_each_subset(cell.facet_count(), n, [&](const std::vector<std::size_t>& idx) {
    Mat a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Vec rhs(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      a.row(static_cast<Eigen::Index>(r)) = w.row(static_cast<Eigen::Index>(idx[r])).normalized();
      rhs(static_cast<Eigen::Index>(r)) = -b(static_cast<Eigen::Index>(idx[r])) / w.row(static_cast<Eigen::Index>(idx[r])).norm();
    }
    Eigen::FullPivLU<Mat> lu(a);
    if (lu.rank() < static_cast<Eigen::Index>(n)) return;
    const Vec x = lu.solve(rhs);
    if (!cell.contains(x, tol)) return;
    for (const auto& v : verts) {
      if ((v - x).norm() <= tol) return;
    }
    verts.push_back(x);
  });
  return verts;
}

double simplex_volume(const std::vector<Vec>& vertices) {
  const Eigen::Index n = vertices.front().size();
  Mat edges(n, n);
  for (Eigen::Index k = 0; k < n; ++k) edges.col(k) = vertices[static_cast<std::size_t>(k + 1)] - vertices[0];
  double fact = 1.0;
  for (Eigen::Index k = 2; k <= n; ++k) fact *= static_cast<double>(k);
  return std::abs(edges.determinant()) / fact;
}

double cell_volume(const PolytopeMesh& mesh, std::size_t c) {
  const int n = mesh.dimension;
  const ConvexCell& cell = mesh.cells[c];
  if (cell.vertex_ids.size() == static_cast<std::size_t>(n + 1)) return simplex_volume(mesh.cell_vertices(c));
  if (n == 1) {
    const auto box = cell_bounding_box(cell);
    return box ? box->hi(0) - box->lo(0) : 0.0;
  }
  const auto verts = enumerate_vertices(cell);
  if (verts.size() < static_cast<std::size_t>(n + 1)) return 0.0;
  if (n == 2) {
    const auto ring = sort_in_plane(verts, Vec::Unit(2, 0));
    double area = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Vec& p = ring[i];
      const Vec& q = ring[(i + 1) % ring.size()];
      area += p(0) * q(1) - p(1) * q(0);
    }
    return 0.5 * std::abs(area);
  }
  if (n == 3) {
    Vec centroid = Vec::Zero(3);
    for (const auto& v : verts) centroid += v;
    centroid /= static_cast<double>(verts.size());
    double vol = 0.0;
    for (const auto& h : cell.halfspaces) {
      std::vector<Vec> face;
      for (const auto& v : verts) {
        if (std::abs(h.distance(v)) <= 1e-9) face.push_back(v);
      }
      if (face.size() < 3) continue;
      const auto ring = sort_in_plane(face, h.normal.transpose());
      for (std::size_t i = 1; i + 1 < ring.size(); ++i) {
        vol += simplex_volume({centroid, ring[0], ring[i], ring[i + 1]});
      }
    }
    return vol;
  }
  throw std::invalid_argument("cell_volume: general polytopes supported only for n <= 3");
}

double mesh_volume(const PolytopeMesh& mesh) {
  double v = 0.0;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) v += cell_volume(mesh, c);
  return v;
}

ConvexCell remove_redundant_halfspaces(const ConvexCell& cell, double tol) {
  ConvexCell out = cell;
  out.vertex_ids.clear();
  for (std::size_t i = 0; i < out.halfspaces.size();) {
    ConvexCell others;
    for (std::size_t j = 0; j < out.halfspaces.size(); ++j) {
      if (j != i) others.halfspaces.push_back(out.halfspaces[j]);
    }
    const Halfspace& h = out.halfspaces[i];
    const auto r = lp::maximize_over_polytope(others.normals(), others.offsets(), -h.normal.transpose());
    const bool redundant = r.status == lp::Status::optimal && (-r.objective + h.offset) >= -tol * h.normal.norm();
    if (redundant) {
      out.halfspaces.erase(out.halfspaces.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

CellLocator::CellLocator(const PolytopeMesh& mesh) : mesh_(&mesh) {
  const Eigen::Index n = mesh.dimension;
  bounds_ = mesh_bounding_box(mesh);
  const Vec pad = Vec::Constant(n, 1e-9 * std::max(1.0, bounds_.diameter()));
  bounds_.lo -= pad;
  bounds_.hi += pad;

  const double per_axis = std::pow(static_cast<double>(mesh.cells.size()), 1.0 / static_cast<double>(n));
  dims_.assign(static_cast<std::size_t>(n), std::max(1, static_cast<int>(std::ceil(per_axis))));
  std::size_t total = 1;
  for (int d : dims_) total *= static_cast<std::size_t>(d);
  buckets_.resize(total);

  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    Box box;
    if (mesh.cells[c].vertex_ids.size() == static_cast<std::size_t>(n + 1)) {
      box = {Vec::Constant(n, std::numeric_limits<double>::infinity()),
             Vec::Constant(n, -std::numeric_limits<double>::infinity())};
      for (std::size_t id : mesh.cells[c].vertex_ids) {
        box.lo = box.lo.cwiseMin(mesh.vertices[id]);
        box.hi = box.hi.cwiseMax(mesh.vertices[id]);
      }
    } else if (auto b = cell_bounding_box(mesh.cells[c])) {
      box = *b;
    } else {
      continue;
    }
    std::vector<int> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
      const double span = bounds_.hi(k) - bounds_.lo(k);
      const int d = dims_[static_cast<std::size_t>(k)];
      auto cellof = [&](double v) {
        return std::clamp(static_cast<int>(std::floor((v - bounds_.lo(k)) / span * d)), 0, d - 1);
      };
      lo[static_cast<std::size_t>(k)] = cellof(box.lo(k) - pad(k));
      hi[static_cast<std::size_t>(k)] = cellof(box.hi(k) + pad(k));
    }
    std::vector<int> idx = lo;
    for (;;) {
      std::size_t flat = 0, stride = 1;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        flat += static_cast<std::size_t>(idx[k]) * stride;
        stride *= static_cast<std::size_t>(dims_[k]);
      }
      buckets_[flat].push_back(c);
      std::size_t k = 0;
      while (k < idx.size() && idx[k] == hi[k]) {
        idx[k] = lo[k];
        ++k;
      }
      if (k == idx.size()) break;
      ++idx[k];
    }
  }
}

const std::vector<std::size_t>* CellLocator::bucket(const Vec& x) const {
  if (!bounds_.contains(x)) return nullptr;
  std::size_t flat = 0, stride = 1;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double span = bounds_.hi(kk) - bounds_.lo(kk);
    const int i = std::clamp(static_cast<int>(std::floor((x(kk) - bounds_.lo(kk)) / span * dims_[k])), 0, dims_[k] - 1);
    flat += static_cast<std::size_t>(i) * stride;
    stride *= static_cast<std::size_t>(dims_[k]);
  }
  return &buckets_[flat];
}

std::optional<std::size_t> CellLocator::locate(const Vec& x, double tol) const {
  const auto* b = bucket(x);
  if (!b) return std::nullopt;
  for (std::size_t c : *b) {
    if (mesh_->cells[c].contains(x, tol)) return c;
  }
  return std::nullopt;
}

std::size_t CellLocator::count_strict(const Vec& x, double tol) const {
  const auto* b = bucket(x);
  if (!b) return 0;
  std::size_t count = 0;
  for (std::size_t c : *b) {
    if (mesh_->cells[c].boundary_distance(x) > tol) ++count;
  }
  return count;
}

}  // namespace relufe
