#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <string>

#include "relufe/compile.hpp"
#include "relufe/error.hpp"
#include "relufe/io.hpp"
#include "relufe/sampling.hpp"
#include "relufe/verify.hpp"

using namespace relufe;

namespace {

struct Config {
  std::string mesh, function, network, input, points, output;
  double epsilon = std::nan("");
  std::uint64_t seed = 0;
  std::size_t samples = 20000;
  std::size_t conv_samples = 100000;
  bool output_bias = false;
  bool compact_support = false;
  bool whole_space_rank = false;
  double p = 2.0;
  std::vector<int> Ns{2, 4, 8, 16};
  int n = 2;
  int N = 2;
  double tol = 1e-12;
  int threads = 0;
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string("missing required option ") + flag);
}

void emit(const Config& cfg, const std::string& text) {
  if (cfg.output.empty() || cfg.output == "-") {
    std::cout << text;
  } else {
    io::write_text(cfg.output, text);
  }
}

void print_report(const WeakRepReport& r) {
  std::printf("R=%s epsilon=%s\n", fmt(r.R).c_str(), fmt(r.epsilon).c_str());
  std::printf("interior: max|f-v|=%.3e tol=%.3e samples=%zu %s\n", r.interior_mismatch, r.interior_tol,
              r.interior_samples, r.interior_ok() ? "ok" : "FAIL");
  std::printf("domain:   max|f|=%.17g limit=%.17g samples=%zu %s\n", r.domain_sup, r.bound_limit, r.domain_samples,
              r.bound_ok() ? "ok" : "FAIL");
  std::printf("exterior: max|f-%s|=%.3e tol=%.3e samples=%zu %s\n", r.compact_support ? "0" : "(-R)",
              r.exterior_deviation, r.exterior_tol, r.exterior_samples, r.exterior_ok() ? "ok" : "FAIL");
}

void print_counts(const CountCheck& c) {
  std::printf("h1=%zu h2=%zu H_i=%zu H_b=%zu N_T=%zu\n", c.actual_h1, c.actual_h2, c.interior_hyperplanes,
              c.boundary_hyperplanes, c.cells);
  if (!c.passed()) {
    std::printf("expected h1=%zu h2=%zu\n", c.expected_h1, c.expected_h2);
  }
}

PolytopeMesh load_mesh(const Config& cfg) {
  require(cfg.mesh, "--mesh");
  PolytopeMesh mesh = io::read_mesh(cfg.mesh);
  const ValidationReport rep = validate_mesh(mesh, 20000, cfg.seed);
  if (!rep.ok()) throw ValidationError("mesh: " + rep.issues.front());
  return mesh;
}

PiecewiseLinear load_function(const Config& cfg, const PolytopeMesh& mesh) {
  require(cfg.function, "--function");
  PiecewiseLinear v = io::read_function(cfg.function, mesh);
  validate_function(mesh, v);
  return v;
}

int cmd_build(const Config& cfg) {
  if (std::isnan(cfg.epsilon)) throw ValidationError("missing required option --epsilon");
  if (!(cfg.epsilon > 0.0)) throw CompileError("epsilon must be > 0 (weak representation needs a positive collar)");
  if (cfg.compact_support && cfg.output_bias) throw ValidationError("--compact-support and --output-bias exclude each other");
  const PolytopeMesh mesh = load_mesh(cfg);
  const PiecewiseLinear v = load_function(cfg, mesh);

  Compilation comp;
  if (cfg.compact_support) {
    comp = compile_compact_support(mesh, v, cfg.epsilon);
  } else {
    CompileOptions opts;
    opts.epsilon = cfg.epsilon;
    opts.output_bias = cfg.output_bias;
    comp = compile_weak_representation(mesh, v, opts);
  }
  for (const auto& w : comp.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  const CountCheck counts = check_counts(mesh, comp.net);
  WeakRepOptions wo;
  wo.samples = cfg.samples;
  wo.seed = cfg.seed;
  wo.compact_support = cfg.compact_support;
  const WeakRepReport report = check_weak_representation(comp.net, v, mesh, cfg.epsilon, wo);

  if (!cfg.output.empty()) io::write_text(cfg.output, io::format_network(comp.net));
  print_counts(counts);
  if (!counts.passed()) throw VerifyError("network size does not match the hyperplane count");
  if (!report.passed()) {
    print_report(report);
    throw VerifyError("self-check failed");
  }
  return 0;
}

int cmd_verify(const Config& cfg) {
  require(cfg.network, "--network");
  const ReluNet2 net = io::read_network(cfg.network);
  const PolytopeMesh mesh = load_mesh(cfg);
  const PiecewiseLinear v = load_function(cfg, mesh);
  double eps = cfg.epsilon;
  bool compact = cfg.compact_support;
  if (net.provenance) {
    if (std::isnan(eps)) eps = net.provenance->epsilon;
    compact = compact || net.provenance->compact_support;
    if (net.provenance->mesh_hash != mesh_fingerprint(mesh)) {
      std::fprintf(stderr, "warning: network was compiled for a different mesh\n");
    }
  }
  if (std::isnan(eps)) throw ValidationError("missing --epsilon and no provenance in the network file");
  WeakRepOptions wo;
  wo.samples = cfg.samples;
  wo.seed = cfg.seed;
  wo.compact_support = compact;
  const WeakRepReport report = check_weak_representation(net, v, mesh, eps, wo);
  print_report(report);
  if (!report.passed()) throw VerifyError("weak representation check failed");
  return 0;
}

int cmd_counts(const Config& cfg) {
  require(cfg.network, "--network");
  const ReluNet2 net = io::read_network(cfg.network);
  const PolytopeMesh mesh = load_mesh(cfg);
  const CountCheck c = check_counts(mesh, net);
  print_counts(c);
  if (!c.passed()) throw VerifyError("network size does not match the hyperplane count");
  return 0;
}

int cmd_freudenthal(const Config& cfg) {
  if (cfg.n < 1 || cfg.N < 1) throw ValidationError("--n and --N must be >= 1");
  emit(cfg, io::format_mesh(freudenthal_mesh(cfg.n, cfg.N)));
  return 0;
}

int cmd_convergence(const Config& cfg) {
  const ScalarFn target = [](const Vec& x) {
    double v = 1.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) v *= std::sin(std::numbers::pi * x(k));
    return v;
  };
  ConvergenceOptions opts;
  opts.samples = cfg.conv_samples;
  opts.seed = cfg.seed;
  const ConvergenceTable table = convergence_experiment(target, cfg.p, cfg.Ns, cfg.n, opts);
  emit(cfg, table.to_csv());
  std::fprintf(stderr, "slope=%.6f\n", table.slope);
  if (!table.counts_ok()) throw VerifyError("first-layer size differs from 2n^2N - n^2 + n");
  return 0;
}

int cmd_tnn_build(const Config& cfg) {
  require(cfg.input, "--input");
  const TensorFE u = io::read_tensor_fe(cfg.input);
  TnnCompileOptions opts;
  opts.target_tol = cfg.tol;
  opts.whole_space_rank = cfg.whole_space_rank;
  opts.seed = cfg.seed;
  const TnnCompilation comp = compile_tnn(u, opts);
  if (!cfg.output.empty()) io::write_text(cfg.output, io::format_tensor_net(comp.net));
  std::printf("rank=%lld widths=", static_cast<long long>(comp.net.rank()));
  for (std::size_t k = 0; k < comp.net.branches.size(); ++k) {
    std::printf("%s%lld", k ? "," : "", static_cast<long long>(comp.net.branches[k].width()));
  }
  std::printf(" residual=%.3e%s\n", comp.cp.residual, comp.cp.fallback ? " (fiber fallback)" : "");
  return 0;
}

int cmd_tnn_verify(const Config& cfg) {
  require(cfg.network, "--network");
  require(cfg.input, "--input");
  const TensorNet net = io::read_tensor_net(cfg.network);
  const TensorFE u = io::read_tensor_fe(cfg.input);
  const std::size_t n = u.mesh.axis_count();
  if (net.axis_count() != n) throw ValidationError("tnn and tensor FE have different axis counts");

  double worst = 0.0;
  const auto shape = u.mesh.shape();
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t flat = 0; flat < u.coefficients.size(); ++flat) {
    Vec x(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) x(static_cast<Eigen::Index>(k)) = u.mesh.grids[k][idx[k]];
    worst = std::max(worst, std::abs(tnn_forward(net, x) - u.coefficients.data[flat]));
    for (std::size_t k = n; k-- > 0;) {
      if (++idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
  Vec lo(static_cast<Eigen::Index>(n)), hi(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    lo(static_cast<Eigen::Index>(k)) = u.mesh.grids[k].front();
    hi(static_cast<Eigen::Index>(k)) = u.mesh.grids[k].back();
  }
  const PointSet pts = uniform_box_points(lo, hi, cfg.samples, cfg.seed, 0x7e);
  const Vec t = tnn_forward_batch(net, pts);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) worst = std::max(worst, std::abs(t(i) - eval_tensor_fe(u, pts.col(i))));
  const double tol = 1e-9 * (1.0 + u.coefficients.max_abs());
  std::printf("max|tnn-u|=%.3e tol=%.3e points=%zu %s\n", worst, tol,
              u.coefficients.size() + static_cast<std::size_t>(pts.cols()), worst <= tol ? "ok" : "FAIL");
  if (!(worst <= tol)) throw VerifyError("tensor network does not reproduce the tensor FE function");
  return 0;
}

int cmd_eval(const Config& cfg) {
  require(cfg.network, "--network");
  require(cfg.points, "--points");
  const std::string text = io::read_text(cfg.network);
  Vec values;
  if (text.find("\"tnn\"") != std::string::npos) {
    const TensorNet net = io::parse_tensor_net(text);
    values = tnn_forward_batch(net, io::read_points(cfg.points, static_cast<int>(net.axis_count())));
  } else {
    const ReluNet2 net = io::parse_network(text);
    values = fnn_forward_batch(net, io::read_points(cfg.points, static_cast<int>(net.input_dim())));
  }
  std::string out;
  for (Eigen::Index i = 0; i < values.size(); ++i) out += fmt(values(i)) + "\n";
  emit(cfg, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile piecewise linear finite element functions into ReLU networks"};
  app.require_subcommand(1);
  Config cfg;
  app.add_option("--threads", cfg.threads, "OpenMP threads (0: RELUFE_THREADS or all cores)");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--samples", cfg.samples, "Samples per region");
    sub->add_option("--output", cfg.output, "Output file ('-' for stdout)");
  };

  auto* build = app.add_subcommand("build", "Compile a mesh function into a network and self-check it");
  build->add_option("--mesh", cfg.mesh)->required();
  build->add_option("--function", cfg.function)->required();
  build->add_option("--epsilon", cfg.epsilon)->required();
  build->add_flag("--output-bias", cfg.output_bias, "Use an output bias instead of a constant neuron");
  build->add_flag("--compact-support", cfg.compact_support, "Vanish outside the domain hull");
  common(build);

  auto* verify = app.add_subcommand("verify", "Check the weak-representation properties of a network");
  verify->add_option("--network", cfg.network)->required();
  verify->add_option("--mesh", cfg.mesh)->required();
  verify->add_option("--function", cfg.function)->required();
  verify->add_option("--epsilon", cfg.epsilon, "Defaults to the value recorded in the network");
  verify->add_flag("--compact-support", cfg.compact_support);
  common(verify);

  auto* counts = app.add_subcommand("counts", "Compare network widths against the hyperplane count");
  counts->add_option("--network", cfg.network)->required();
  counts->add_option("--mesh", cfg.mesh)->required();

  auto* freud = app.add_subcommand("freudenthal", "Write the Freudenthal triangulation of the unit cube");
  freud->add_option("--n", cfg.n, "Dimension")->required();
  freud->add_option("--N", cfg.N, "Subdivisions per axis")->required();
  freud->add_option("--output", cfg.output);

  auto* conv = app.add_subcommand("convergence", "L^p error of compiled interpolants of prod sin(pi x_k)");
  conv->add_option("--p", cfg.p);
  conv->add_option("--Ns", cfg.Ns)->delimiter(',');
  conv->add_option("--n", cfg.n);
  conv->add_option("--seed", cfg.seed, "RNG seed");
  conv->add_option("--samples", cfg.conv_samples, "Monte-Carlo samples per N");
  conv->add_option("--output", cfg.output, "CSV file ('-' for stdout)");

  auto* tbuild = app.add_subcommand("tnn-build", "Compile a tensor FE function into a tensor network");
  tbuild->add_option("--input", cfg.input, "Tensor FE file")->required();
  tbuild->add_option("--tol", cfg.tol, "CP reconstruction tolerance");
  tbuild->add_flag("--whole-space-rank", cfg.whole_space_rank, "Pad the rank to the shape bound");
  common(tbuild);

  auto* tverify = app.add_subcommand("tnn-verify", "Compare a tensor network with a tensor FE function");
  tverify->add_option("--network", cfg.network)->required();
  tverify->add_option("--input", cfg.input)->required();
  common(tverify);

  auto* eval = app.add_subcommand("eval", "Evaluate a network file at the points of a text file");
  eval->add_option("--network", cfg.network)->required();
  eval->add_option("--points", cfg.points)->required();
  eval->add_option("--output", cfg.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  int threads = cfg.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("RELUFE_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*build) return cmd_build(cfg);
    if (*verify) return cmd_verify(cfg);
    if (*counts) return cmd_counts(cfg);
    if (*freud) return cmd_freudenthal(cfg);
    if (*conv) return cmd_convergence(cfg);
    if (*tbuild) return cmd_tnn_build(cfg);
    if (*tverify) return cmd_tnn_verify(cfg);
    if (*eval) return cmd_eval(cfg);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 3;
  } catch (const CompileError& e) {
    std::fprintf(stderr, "compile error: %s\n", e.what());
    return 4;
  } catch (const VerifyError& e) {
    std::fprintf(stderr, "verify error: %s\n", e.what());
    return 5;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
