// Serial reference vs OpenMP kernel, side by side for each hot loop.
#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "fairbn/feo_system.hpp"
#include "fairbn/learning.hpp"
#include "fairbn/sampler.hpp"

using namespace fairbn;

namespace {

// Binary layered network: each node has up to two parents among the previous three.
Network layered(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  NetworkSpec spec;
  for (std::size_t v = 0; v < n; ++v) spec.variables.push_back({"X" + std::to_string(v), {"0", "1"}});
  for (std::size_t v = 0; v < n; ++v) {
    CptSpec cpt{spec.variables[v].name, {}, {}};
    for (std::size_t back = 1; back <= 3 && back <= v && cpt.parents.size() < 2; ++back) {
      if (rng() % 2 == 0) continue;
      cpt.parents.push_back(spec.variables[v - back].name);
      spec.edges.emplace_back(spec.variables[v - back].name, spec.variables[v].name);
    }
    const std::size_t rows = std::size_t{1} << cpt.parents.size();
    for (std::size_t r = 0; r < rows; ++r) {
      CptRowSpec row;
      for (std::size_t i = 0; i < cpt.parents.size(); ++i) {
        row.given[cpt.parents[i]] = std::to_string((r >> (cpt.parents.size() - 1 - i)) & 1);
      }
      const double p = u(rng);
      row.p = {1.0 - p, p};
      cpt.rows.push_back(row);
    }
    spec.cpts.push_back(cpt);
  }
  return Network::build(spec);
}

Exec mode(const benchmark::State& state) { return state.range(1) == 0 ? Exec::serial : Exec::parallel; }

void label(benchmark::State& state) { state.SetLabel(state.range(1) == 0 ? "serial" : "openmp"); }

void BM_JointTable(benchmark::State& state) {
  const Network net = layered(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::joint_table(net, mode(state)));
  label(state);
}
BENCHMARK(BM_JointTable)->ArgsProduct({{14, 18}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_ControlBuckets(benchmark::State& state) {
  const Network net = layered(static_cast<std::size_t>(state.range(0)));
  const VarIndex control = net.size() / 2;
  const std::vector<VarIndex> keys{0, static_cast<VarIndex>(net.size() - 1)};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::control_buckets(net, control, keys, mode(state)));
  label(state);
}
BENCHMARK(BM_ControlBuckets)->ArgsProduct({{14, 18}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_SampleCodes(benchmark::State& state) {
  const Network net = layered(12);
  const auto count = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_codes(net, count, 7, mode(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  label(state);
}
BENCHMARK(BM_SampleCodes)->ArgsProduct({{100'000, 1'000'000}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_CountEntries(benchmark::State& state) {
  const Network net = layered(12);
  const auto count = static_cast<std::size_t>(state.range(0));
  const auto codes = sample_codes(net, count, 7, Exec::parallel);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::count_entries(net, codes, count, mode(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  label(state);
}
BENCHMARK(BM_CountEntries)->ArgsProduct({{100'000, 1'000'000}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
