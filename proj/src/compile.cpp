#include "relufe/compile.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>

#include "relufe/error.hpp"
#include "relufe/geometry.hpp"
#include "relufe/lp.hpp"

namespace relufe {

Vec positive_normal_combination(const ConvexCell& cell) {
  // lambda = 1 + y, y >= 0:  W^T y = -W^T 1,  minimize sum(y).
  const Mat wt = cell.normals().transpose();
  const Eigen::Index m = wt.cols();
  const Vec rhs = -wt * Vec::Ones(m);
  const auto r = lp::minimize_standard(wt, rhs, Vec::Ones(m));
  if (r.status != lp::Status::optimal) {
    throw CompileError("no positive normal combination: cell is unbounded or degenerate");
  }
  const Vec lambda = Vec::Ones(m) + r.x;
  const double residual = (wt * lambda).norm();
  const double scale = (lambda.array() * cell.normals().rowwise().norm().array()).sum();
  if (residual > 1e-10 * scale) {
    throw CompileError("positive normal combination residual " + std::to_string(residual) + " too large");
  }
  return lambda;
}

Vec solve_mu(const ConvexCell& cell, const RowVec& gradient) {
  const Mat wt = cell.normals().transpose();  // n x m, columns are w_i^T
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(wt);
  cod.setThreshold(1e-12);
  if (cod.rank() < wt.rows()) throw CompileError("facet normals are rank deficient");
  const Vec rhs = -gradient.transpose();
  const Vec mu = cod.solve(rhs);
  const double residual = (wt * mu - rhs).norm();
  if (residual > 1e-10 * (1.0 + gradient.norm())) {
    throw CompileError("mu residual " + std::to_string(residual) + " too large");
  }
  return mu;
}

Shift shift_t0(const ConvexCell& cell, const Vec& mu, const Vec& lambda, double c, double R, double epsilon) {
  if (!(epsilon > 0.0)) throw CompileError("epsilon must be > 0 (weak representation needs a positive collar)");
  if (!(lambda.minCoeff() > 0.0)) throw CompileError("lambda must be strictly positive");
  const Vec norms = cell.normals().rowwise().norm();
  const Vec b = cell.offsets();

  Shift out;
  out.s = (mu.array() / lambda.array()).abs().maxCoeff() + 1.0;
  const double k = (mu + out.s * lambda).dot(b) + c + R;
  const double numerator = std::abs(k) + epsilon * (mu.array().abs() * norms.array()).sum();
  const double denominator = epsilon * (lambda.array() * norms.array()).minCoeff();
  out.t0 = std::max(numerator / denominator, out.s + 1.0);
  return out;
}

double CellBump::eval(const Vec& x) const {
  const Vec hidden = (W_I * x + b_I).cwiseMax(0.0);
  return relu(w_II.dot(hidden) + b_II);
}

CellBump compile_cell_bump(const ConvexCell& cell, const AffinePiece& piece, double R, double epsilon,
                           std::size_t cell_index) {
  if (!(epsilon > 0.0)) throw CompileError("epsilon must be > 0 (weak representation needs a positive collar)");
  CellBump bump;
  bump.cell = cell_index;
  bump.lambda = positive_normal_combination(cell);
  bump.mu = solve_mu(cell, piece.gradient);
  const Shift shift = shift_t0(cell, bump.mu, bump.lambda, piece.constant, R, epsilon);
  bump.s = shift.s;
  bump.t0 = shift.t0 * kT0Safety;

  const Vec norms = cell.normals().rowwise().norm();
  const Vec coeff = bump.mu + bump.t0 * bump.lambda;  // all positive
  bump.W_I = cell.normals();
  bump.b_I = cell.offsets() - epsilon * norms;
  bump.w_II = -coeff.transpose();
  bump.b_II = coeff.dot(bump.b_I) + piece.constant + R;
  return bump;
}

ReluNet2 merge_duplicate_neurons(const UnmergedNet& unmerged, const HyperplaneRegistry& registry) {
  const ReluNet2& in = unmerged.net;
  if (unmerged.tags.size() != static_cast<std::size_t>(in.h1())) {
    throw std::logic_error("merge_duplicate_neurons: every first-layer neuron needs a registry tag");
  }
  const auto h1 = static_cast<Eigen::Index>(registry.size());
  ReluNet2 out;
  out.W1 = Mat::Zero(h1, in.input_dim());
  out.b1 = Vec::Zero(h1);
  // Each entry's neuron is its first facet's row divided by a power of two
  // near that facet's norm. The division is exact, so neurons taken over
  // unchanged (and bitwise-equal duplicates) carry no rounding error.
  std::vector<double> first_scale(registry.size(), 0.0), pow2(registry.size(), 0.0);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(in.W2.nonZeros()));

  for (Eigen::Index j = 0; j < in.h1(); ++j) {
    const FacetRef& tag = unmerged.tags[static_cast<std::size_t>(j)];
    if (tag.entry >= registry.size() || !(tag.scale > 0.0)) {
      throw std::logic_error("merge_duplicate_neurons: invalid registry tag");
    }
    if (first_scale[tag.entry] == 0.0) {
      int exponent = 0;
      std::frexp(tag.scale, &exponent);
      const double p = std::ldexp(1.0, exponent - 1);
      // relu(s (w x + b)) = s relu(w x + b) for s > 0.
      out.W1.row(static_cast<Eigen::Index>(tag.entry)) = in.W1.row(j) / p;
      out.b1(static_cast<Eigen::Index>(tag.entry)) = in.b1(j) / p;
      first_scale[tag.entry] = tag.scale;
      pow2[tag.entry] = p;
    }
  }
  for (Eigen::Index r = 0; r < in.W2.outerSize(); ++r) {
    for (SparseRowMat::InnerIterator it(in.W2, r); it; ++it) {
      const FacetRef& tag = unmerged.tags[static_cast<std::size_t>(it.col())];
      const double factor = (tag.scale / first_scale[tag.entry]) * pow2[tag.entry];
      trip.emplace_back(static_cast<int>(r), static_cast<int>(tag.entry), it.value() * factor);
    }
  }
  out.W2.resize(in.h2(), h1);
  out.W2.setFromTriplets(trip.begin(), trip.end());
  out.b2 = in.b2;
  out.w3 = in.w3;
  out.output_bias = in.output_bias;
  out.provenance = in.provenance;
  return out;
}

namespace {

template <class F>
void for_each_cell(std::size_t count, Exec exec, F&& body) {
  std::exception_ptr error;
  if (exec == Exec::serial) {
    for (std::size_t c = 0; c < count; ++c) body(c);
    return;
  }
#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < count; ++c) {
    try {
      body(c);
    } catch (...) {
#pragma omp critical(relufe_compile_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

void check_shrunk(const ConvexCell& cell, double epsilon, const std::string& name) {
  if (!(cell_inradius(cell) > epsilon)) {
    throw CompileError("epsilon too large: shrunk " + name + " is empty");
  }
}

std::vector<CellBump> compile_bumps(const PolytopeMesh& mesh, const PiecewiseLinear& v, double R, double epsilon,
                                    Exec exec) {
  std::vector<CellBump> bumps(mesh.cells.size());
  for_each_cell(mesh.cells.size(), exec, [&](std::size_t c) {
    const std::string name = "cell " + std::to_string(c);
    check_shrunk(mesh.cells[c], epsilon, name);
    try {
      bumps[c] = compile_cell_bump(mesh.cells[c], v.pieces[c], R, epsilon, c);
    } catch (const CompileError& e) {
      throw CompileError(name + ": " + e.what());
    }
  });
  return bumps;
}

void collect_warnings(const std::vector<CellBump>& bumps, std::vector<std::string>& warnings) {
  for (const auto& b : bumps) {
    const double peak = b.w_II.cwiseAbs().maxCoeff();
    if (peak > kConditioningLimit) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "cell %zu: second-layer weight %.3e exceeds %.0e (ill-conditioned, epsilon too small)",
                    b.cell, peak, kConditioningLimit);
      warnings.emplace_back(buf);
    }
  }
}

// Stacks bump first layers in cell order and places each bump's second-layer
// row on its own block. The last second-layer row is `tail` (bias tail_bias).
UnmergedNet assemble(const PolytopeMesh& mesh, const HyperplaneRegistry& registry, const std::vector<CellBump>& bumps,
                     const CellBump* tail, const std::vector<FacetRef>* tail_refs, double tail_bias, bool keep_tail) {
  const Eigen::Index n = mesh.dimension;
  Eigen::Index h1 = 0;
  for (const auto& b : bumps) h1 += b.W_I.rows();
  if (tail) h1 += tail->W_I.rows();
  const Eigen::Index cells = static_cast<Eigen::Index>(bumps.size());
  const Eigen::Index h2 = cells + (keep_tail ? 1 : 0);

  UnmergedNet out;
  out.net.W1.resize(h1, n);
  out.net.b1.resize(h1);
  out.tags.reserve(static_cast<std::size_t>(h1));
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < bumps.size(); ++c) {
    const auto& b = bumps[c];
    const auto m = b.W_I.rows();
    out.net.W1.middleRows(row, m) = b.W_I;
    out.net.b1.segment(row, m) = b.b_I;
    for (Eigen::Index i = 0; i < m; ++i) {
      trip.emplace_back(static_cast<int>(c), static_cast<int>(row + i), b.w_II(i));
      out.tags.push_back(registry.facet_refs()[c][static_cast<std::size_t>(i)]);
    }
    row += m;
  }
  if (tail) {
    const auto m = tail->W_I.rows();
    out.net.W1.middleRows(row, m) = tail->W_I;
    out.net.b1.segment(row, m) = tail->b_I;
    for (Eigen::Index i = 0; i < m; ++i) {
      trip.emplace_back(static_cast<int>(cells), static_cast<int>(row + i), tail->w_II(i));
      out.tags.push_back((*tail_refs)[static_cast<std::size_t>(i)]);
    }
  }
  out.net.W2.resize(h2, h1);
  out.net.W2.setFromTriplets(trip.begin(), trip.end());
  out.net.b2.resize(h2);
  for (std::size_t c = 0; c < bumps.size(); ++c) out.net.b2(static_cast<Eigen::Index>(c)) = bumps[c].b_II;
  out.net.w3 = RowVec::Ones(h2);
  if (keep_tail) {
    out.net.b2(cells) = tail_bias;
    out.net.w3(cells) = -1.0;
  }
  return out;
}

Provenance make_provenance(const PolytopeMesh& mesh, const HyperplaneRegistry& registry,
                           const std::vector<CellBump>& bumps, double epsilon, double R, bool compact) {
  Provenance p;
  p.mesh_hash = mesh_fingerprint(mesh);
  p.epsilon = epsilon;
  p.R = R;
  p.compact_support = compact;
  p.cells = mesh.cells.size();
  p.interior_hyperplanes = registry.interior_count();
  p.boundary_hyperplanes = registry.boundary_count();
  for (const auto& b : bumps) p.t0.push_back(b.t0);
  return p;
}

void check_inputs(const PolytopeMesh& mesh, const PiecewiseLinear& v, double epsilon) {
  if (!(epsilon > 0.0)) throw CompileError("epsilon must be > 0 (weak representation needs a positive collar)");
  if (mesh.cells.empty()) throw CompileError("mesh has no cells");
  if (v.pieces.size() != mesh.cells.size()) throw CompileError("function pieces do not match mesh cells");
}

}  // namespace

Compilation compile_weak_representation(const PolytopeMesh& mesh, const PiecewiseLinear& v,
                                         const CompileOptions& options) {
  check_inputs(mesh, v, options.epsilon);
  Compilation out;
  out.R = sup_norm(mesh, v);
  out.registry = build_registry(mesh);
  out.bumps = compile_bumps(mesh, v, out.R, options.epsilon, options.exec);
  collect_warnings(out.bumps, out.warnings);

  // Constant neuron relu(0 . h + R) = R weighted by -1, or an output bias -R.
  out.unmerged = assemble(mesh, out.registry, out.bumps, nullptr, nullptr, out.R, !options.output_bias);
  if (options.output_bias) out.unmerged.net.output_bias = -out.R;
  out.unmerged.net.provenance = make_provenance(mesh, out.registry, out.bumps, options.epsilon, out.R, false);
  out.net = merge_duplicate_neurons(out.unmerged, out.registry);
  return out;
}

Compilation compile_compact_support(const PolytopeMesh& mesh, const PiecewiseLinear& v, double epsilon, Exec exec) {
  check_inputs(mesh, v, epsilon);
  if (!mesh.domain_hull) throw CompileError("compact support requires a convex domain hull");
  const ConvexCell& hull = *mesh.domain_hull;
  if (!cell_bounding_box(hull)) throw CompileError("domain hull is unbounded or empty");
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    for (const auto& v_id : enumerate_vertices(mesh.cells[c])) {
      if (!hull.contains(v_id, 1e-9)) {
        throw CompileError("domain hull does not contain cell " + std::to_string(c));
      }
    }
  }

  Compilation out;
  out.R = sup_norm(mesh, v);
  out.registry = build_registry(mesh);
  std::vector<FacetRef> hull_refs;
  for (const auto& h : hull.halfspaces) hull_refs.push_back(out.registry.add(h));
  out.bumps = compile_bumps(mesh, v, out.R, epsilon, exec);
  check_shrunk(hull, epsilon, "domain hull");

  // Hull bump for the constant R/2 with bound R/2: R on the shrunk hull,
  // within [0, R] on its collar, 0 outside.
  const double half = 0.5 * out.R;
  const CellBump hull_bump = compile_cell_bump(hull, AffinePiece{RowVec::Zero(mesh.dimension), half}, half, epsilon,
                                               mesh.cells.size());
  std::vector<CellBump> all = out.bumps;
  all.push_back(hull_bump);
  collect_warnings(all, out.warnings);

  out.unmerged = assemble(mesh, out.registry, out.bumps, &hull_bump, &hull_refs, hull_bump.b_II, true);
  out.unmerged.net.provenance = make_provenance(mesh, out.registry, out.bumps, epsilon, out.R, true);
  out.net = merge_duplicate_neurons(out.unmerged, out.registry);
  return out;
}

std::string mesh_fingerprint(const PolytopeMesh& mesh) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  auto mix_double = [&](double d) { mix(&d, sizeof d); };
  auto mix_cell = [&](const ConvexCell& cell) {
    const std::uint64_t m = cell.halfspaces.size();
    mix(&m, sizeof m);
    for (const auto& hs : cell.halfspaces) {
      for (Eigen::Index k = 0; k < hs.normal.size(); ++k) mix_double(hs.normal(k));
      mix_double(hs.offset);
    }
  };
  const std::int64_t dim = mesh.dimension;
  mix(&dim, sizeof dim);
  for (const auto& c : mesh.cells) mix_cell(c);
  if (mesh.domain_hull) mix_cell(*mesh.domain_hull);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace relufe
