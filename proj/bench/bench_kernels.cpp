#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "relufe/compile.hpp"
#include "relufe/sampling.hpp"
#include "relufe/tensorfe.hpp"

using namespace relufe;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

const Compilation& compiled(int N) {
  static std::map<int, Compilation> cache;
  auto it = cache.find(N);
  if (it == cache.end()) {
    const PolytopeMesh mesh = freudenthal_mesh(2, N);
    std::vector<double> nodal;
    for (const auto& v : mesh.vertices) nodal.push_back(v(0) * v(1));
    CompileOptions o;
    o.epsilon = 1e-3 / N;
    it = cache.emplace(N, compile_weak_representation(mesh, nodal_linear(mesh, nodal), o)).first;
  }
  return it->second;
}

void BM_FnnForwardBatch(benchmark::State& state) {
  const auto& net = compiled(static_cast<int>(state.range(1))).net;
  const PointSet pts = uniform_box_points(Vec::Zero(2), Vec::Ones(2), 100000, 1, 0, Exec::serial);
  for (auto _ : state) benchmark::DoNotOptimize(fnn_forward_batch(net, pts, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * pts.cols());
}
BENCHMARK(BM_FnnForwardBatch)->ArgsProduct({{0, 1}, {8, 32}})->Unit(benchmark::kMillisecond);

void BM_Compile(benchmark::State& state) {
  const int N = static_cast<int>(state.range(1));
  const PolytopeMesh mesh = freudenthal_mesh(3, N);
  std::vector<double> nodal;
  for (const auto& v : mesh.vertices) nodal.push_back(v.sum());
  const PiecewiseLinear v = nodal_linear(mesh, nodal);
  CompileOptions o;
  o.epsilon = 1e-3 / N;
  o.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(compile_weak_representation(mesh, v, o));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(mesh.cells.size()));
}
BENCHMARK(BM_Compile)->ArgsProduct({{0, 1}, {2, 4}})->Unit(benchmark::kMillisecond);

void BM_SampleShrunk(benchmark::State& state) {
  const PolytopeMesh mesh = freudenthal_mesh(2, 16);
  for (auto _ : state) benchmark::DoNotOptimize(sample_shrunk_domain(mesh, 1e-3, 200000, 3, exec_of(state)));
}
BENCHMARK(BM_SampleShrunk)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TnnForwardBatch(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  TensorFE u;
  for (int k = 0; k < 2; ++k) {
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(i / 40.0);
    u.mesh.grids.push_back(grid);
  }
  u.coefficients.shape = u.mesh.shape();
  for (std::size_t i = 0; i < 41 * 41; ++i) u.coefficients.data.push_back(g(rng));
  const TensorNet net = compile_tnn(u).net;
  const PointSet pts = uniform_box_points(Vec::Zero(2), Vec::Ones(2), 20000, 1, 0, Exec::serial);
  for (auto _ : state) benchmark::DoNotOptimize(tnn_forward_batch(net, pts, exec_of(state)));
}
BENCHMARK(BM_TnnForwardBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
