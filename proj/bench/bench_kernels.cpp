// Serial reference vs OpenMP pairwise kernels. Arguments: N, d.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "aml/dynamics.hpp"
#include "aml/kernels.hpp"

namespace {

const aml::KernelParams kKernel{9.0, aml::KernelScale::peak};

void BM_FieldsSerial(benchmark::State& state) {
  const auto ens = aml::uniform_init(state.range(0), state.range(1), 7);
  std::vector<double> f(ens.size() * ens.dim()), w(ens.size());
  for (auto _ : state) {
    aml::serial::interaction_fields(ens, kKernel, f, w);
    benchmark::DoNotOptimize(f.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_FieldsOpenMP(benchmark::State& state) {
  const auto ens = aml::uniform_init(state.range(0), state.range(1), 7);
  std::vector<double> f(ens.size() * ens.dim()), w(ens.size());
  for (auto _ : state) {
    aml::interaction_fields(ens, kKernel, f, w);
    benchmark::DoNotOptimize(f.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_EnergySerial(benchmark::State& state) {
  const auto ens = aml::uniform_init(state.range(0), state.range(1), 7);
  for (auto _ : state) benchmark::DoNotOptimize(aml::serial::interaction_energy(ens, kKernel));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_EnergyOpenMP(benchmark::State& state) {
  const auto ens = aml::uniform_init(state.range(0), state.range(1), 7);
  for (auto _ : state) benchmark::DoNotOptimize(aml::interaction_energy(ens, kKernel));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int n : {256, 1000, 4000}) {
    for (int d : {2, 3}) b->Args({n, d});
  }
}

}  // namespace

BENCHMARK(BM_FieldsSerial)->Apply(sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FieldsOpenMP)->Apply(sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EnergySerial)->Apply(sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EnergyOpenMP)->Apply(sizes)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
