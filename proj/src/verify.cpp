#include "relufe/verify.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

#include "relufe/compile.hpp"
#include "relufe/error.hpp"
#include "relufe/geometry.hpp"
#include "relufe/sampling.hpp"

namespace relufe {

namespace {

// Points uniform in the domain: bounding-box samples that land in some cell.
PointSet domain_points(const PolytopeMesh& mesh, const CellLocator& locator, std::size_t count, std::uint64_t seed,
                       std::uint64_t stream) {
  const Box& box = locator.bounds();
  std::vector<Vec> kept;
  kept.reserve(count);
  for (std::uint64_t round = 0; kept.size() < count && round < 64; ++round) {
    const PointSet cand = uniform_box_points(box.lo, box.hi, count, seed, stream + round * 0x1000);
    for (Eigen::Index i = 0; i < cand.cols() && kept.size() < count; ++i) {
      if (locator.locate(cand.col(i), 0.0)) kept.push_back(cand.col(i));
    }
  }
  PointSet out(mesh.dimension, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = kept[i];
  return out;
}

// Points within epsilon of a facet, inside their cell.
PointSet collar_points(const PolytopeMesh& mesh, double epsilon, std::size_t count, std::uint64_t seed) {
  const std::size_t cells = mesh.cells.size();
  const std::size_t per_cell = std::max<std::size_t>(1, count / cells);
  std::vector<std::vector<Vec>> found(cells);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < cells; ++c) {
    const ConvexCell& cell = mesh.cells[c];
    const auto box = cell_bounding_box(cell);
    if (!box) continue;
    auto rng = chunk_rng(seed, 0xc011a, c);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> facet(0, cell.facet_count() - 1);
    for (std::size_t tries = 0; found[c].size() < per_cell && tries < 50 * per_cell + 100; ++tries) {
      Vec y(mesh.dimension);
      for (Eigen::Index k = 0; k < y.size(); ++k) y(k) = box->lo(k) + (box->hi(k) - box->lo(k)) * unit(rng);
      if (!cell.contains(y, 0.0)) continue;
      const Halfspace& h = cell.halfspaces[facet(rng)];
      const double norm = h.normal.norm();
      const double depth = epsilon * unit(rng);
      const Vec x = y - ((h.eval(y) / norm - depth) / norm) * h.normal.transpose();
      const double d = cell.boundary_distance(x);
      if (d > 0.0 && d < epsilon) found[c].push_back(x);
    }
  }
  std::size_t total = 0;
  for (const auto& f : found) total += f.size();
  PointSet out(mesh.dimension, static_cast<Eigen::Index>(total));
  Eigen::Index col = 0;
  for (const auto& f : found) {
    for (const auto& x : f) out.col(col++) = x;
  }
  return out;
}

PointSet exterior_points(const PolytopeMesh& mesh, const CellLocator& locator, std::size_t count, std::size_t far,
                         std::uint64_t seed) {
  const Box box = locator.bounds().inflated(3.0);
  const PointSet cand = uniform_box_points(box.lo, box.hi, count, seed, 0xe77);
  std::vector<Vec> kept;
  for (Eigen::Index i = 0; i < cand.cols(); ++i) {
    if (!locator.locate(cand.col(i), 0.0)) kept.push_back(cand.col(i));
  }
  const Vec center = 0.5 * (locator.bounds().lo + locator.bounds().hi);
  const double radius = 10.0 * std::max(locator.bounds().diameter(), 1e-12);
  auto rng = chunk_rng(seed, 0xfa7, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < far; ++i) {
    Vec dir(mesh.dimension);
    for (Eigen::Index k = 0; k < dir.size(); ++k) dir(k) = normal(rng);
    kept.push_back(center + radius * dir.normalized());
  }
  PointSet out(mesh.dimension, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = kept[i];
  return out;
}

}  // namespace

WeakRepReport check_weak_representation(const ReluNet2& net, const PiecewiseLinear& v, const PolytopeMesh& mesh,
                                        double epsilon, const WeakRepOptions& options) {
  if (!(epsilon > 0.0)) throw VerifyError("epsilon must be > 0");
  if (net.input_dim() != mesh.dimension) throw VerifyError("network and mesh dimensions differ");
  if (v.pieces.size() != mesh.cells.size()) throw VerifyError("function pieces do not match mesh cells");

  WeakRepReport report;
  report.R = sup_norm(mesh, v);
  report.epsilon = epsilon;
  report.compact_support = options.compact_support;
  report.interior_tol = 1e-9 * (1.0 + report.R);
  report.bound_limit = (options.compact_support ? 2.0 * report.R : report.R) + 1e-9;
  report.exterior_tol = 1e-9;

  const CellLocator locator(mesh);

  CellSamples inner;
  try {
    inner = sample_shrunk_domain(mesh, epsilon, options.samples, options.seed, options.exec);
  } catch (const std::invalid_argument& e) {
    throw VerifyError(std::string("interior region: ") + e.what());
  }
  const Vec f_in = fnn_forward_batch(net, inner.points, options.exec);
  for (Eigen::Index i = 0; i < inner.points.cols(); ++i) {
    const double target = v.pieces[inner.cell[static_cast<std::size_t>(i)]].eval(inner.points.col(i));
    report.interior_mismatch = std::max(report.interior_mismatch, std::abs(f_in(i) - target));
  }
  report.interior_samples = static_cast<std::size_t>(inner.points.cols());

  const PointSet dom = domain_points(mesh, locator, options.samples, options.seed, 0xd0);
  const PointSet collar = collar_points(mesh, epsilon, options.samples, options.seed);
  for (const PointSet* pts : {&dom, &collar}) {
    const Vec f = fnn_forward_batch(net, *pts, options.exec);
    if (f.size()) report.domain_sup = std::max(report.domain_sup, f.cwiseAbs().maxCoeff());
    report.domain_samples += static_cast<std::size_t>(pts->cols());
  }

  const PointSet ext = exterior_points(mesh, locator, options.samples, options.far_points, options.seed);
  const Vec f_out = fnn_forward_batch(net, ext, options.exec);
  const double exterior_target = options.compact_support ? 0.0 : -report.R;
  for (Eigen::Index i = 0; i < f_out.size(); ++i) {
    report.exterior_deviation = std::max(report.exterior_deviation, std::abs(f_out(i) - exterior_target));
  }
  report.exterior_samples = static_cast<std::size_t>(ext.cols());

  if (report.interior_samples == 0) throw VerifyError("no usable interior samples");
  if (report.domain_samples == 0) throw VerifyError("no usable domain samples");
  if (report.exterior_samples == 0) throw VerifyError("no usable exterior samples");
  return report;
}

CountCheck check_counts(const PolytopeMesh& mesh, const ReluNet2& net) {
  HyperplaneRegistry reg = build_registry(mesh);
  const bool compact = net.provenance && net.provenance->compact_support;
  if (compact && mesh.domain_hull) {
    for (const auto& h : mesh.domain_hull->halfspaces) reg.add(h);
  }
  CountCheck out;
  out.interior_hyperplanes = reg.interior_count();
  out.boundary_hyperplanes = reg.boundary_count();
  out.cells = mesh.cells.size();
  out.expected_h1 = 2 * out.interior_hyperplanes + out.boundary_hyperplanes;
  out.expected_h2 = out.cells + (net.output_bias ? 0 : 1);
  out.actual_h1 = static_cast<std::size_t>(net.h1());
  out.actual_h2 = static_cast<std::size_t>(net.h2());
  return out;
}

BatchFn batch_of(const ReluNet2& net, Exec exec) {
  return [&net, exec](const PointSet& pts) { return fnn_forward_batch(net, pts, exec); };
}

BatchFn batch_of(const PolytopeMesh& mesh, const PiecewiseLinear& v) {
  return [&mesh, &v](const PointSet& pts) {
    const CellLocator locator(mesh);
    Vec out(pts.cols());
    for (Eigen::Index i = 0; i < pts.cols(); ++i) out(i) = eval_pwl(mesh, locator, v, pts.col(i)).value;
    return out;
  };
}

BatchFn batch_of(ScalarFn f) {
  return [f = std::move(f)](const PointSet& pts) {
    Vec out(pts.cols());
    for (Eigen::Index i = 0; i < pts.cols(); ++i) out(i) = f(pts.col(i));
    return out;
  };
}

LpEstimate estimate_lp_error(const BatchFn& f, const BatchFn& v, const PolytopeMesh& mesh, double p,
                             std::size_t samples, std::uint64_t seed) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("estimate_lp_error: p must satisfy 1 <= p < inf");
  if (samples < 1) throw std::invalid_argument("estimate_lp_error: samples must be >= 1");
  const CellLocator locator(mesh);
  const PointSet pts = domain_points(mesh, locator, samples, seed, 0x1b);
  if (pts.cols() == 0) throw VerifyError("estimate_lp_error: no samples landed in the domain");
  const Vec diff = (f(pts) - v(pts)).cwiseAbs();
  const double volume = mesh_volume(mesh);

  // Fixed-order accumulation keeps the estimate bitwise reproducible.
  double sum = 0.0, sum_sq = 0.0;
  for (Eigen::Index i = 0; i < diff.size(); ++i) {
    const double t = std::pow(diff(i), p);
    sum += t;
    sum_sq += t * t;
  }
  const double S = static_cast<double>(diff.size());
  const double mean = sum / S;
  const double var = std::max(0.0, sum_sq / S - mean * mean);
  const double integral = volume * mean;
  const double integral_se = volume * std::sqrt(var / S);

  LpEstimate out;
  out.samples = static_cast<std::size_t>(diff.size());
  out.value = std::pow(integral, 1.0 / p);
  out.stderr_ = integral > 0.0 ? (1.0 / p) * std::pow(integral, 1.0 / p - 1.0) * integral_se : 0.0;
  return out;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fit_loglog_slope: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

bool ConvergenceTable::counts_ok() const {
  for (const auto& r : rows) {
    if (r.h1 != r.expected_h1) return false;
  }
  return true;
}

std::string ConvergenceTable::to_csv() const {
  std::ostringstream os;
  os << "N,h1,h2,error,stderr\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%zu,%zu,%.17g,%.17g\n", r.N, r.h1, r.h2, r.error, r.stderr_);
    os << buf;
  }
  return os.str();
}

ConvergenceTable convergence_experiment(const ScalarFn& target, double p, const std::vector<int>& Ns, int n,
                                        const ConvergenceOptions& options) {
  if (Ns.empty()) throw std::invalid_argument("convergence_experiment: Ns is empty");
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (Ns[i] < 1 || (i > 0 && Ns[i] <= Ns[i - 1])) {
      throw std::invalid_argument("convergence_experiment: Ns must be increasing and >= 1");
    }
  }
  ConvergenceTable table;
  table.n = n;
  table.p = p;
  std::vector<double> xs, ys;
  for (int N : Ns) {
    const PolytopeMesh mesh = freudenthal_mesh(n, N);
    std::vector<double> nodal(mesh.vertices.size());
    for (std::size_t i = 0; i < nodal.size(); ++i) nodal[i] = target(mesh.vertices[i]);
    const PiecewiseLinear v = nodal_linear(mesh, nodal);

    ConvergenceRow row;
    row.N = N;
    row.epsilon = options.epsilon_scale / static_cast<double>(N);
    CompileOptions co;
    co.epsilon = row.epsilon;
    co.exec = options.exec;
    const Compilation comp = compile_weak_representation(mesh, v, co);
    row.h1 = static_cast<std::size_t>(comp.net.h1());
    row.h2 = static_cast<std::size_t>(comp.net.h2());
    row.expected_h1 = static_cast<std::size_t>(2 * n * n * N - n * n + n);

    const LpEstimate err = estimate_lp_error(batch_of(comp.net, options.exec), batch_of(target), mesh, p,
                                             options.samples, options.seed);
    row.error = err.value;
    row.stderr_ = err.stderr_;
    table.rows.push_back(row);
    xs.push_back(static_cast<double>(N));
    ys.push_back(err.value);
  }
  table.slope = xs.size() >= 2 ? fit_loglog_slope(xs, ys) : 0.0;
  return table;
}

}  // namespace relufe
