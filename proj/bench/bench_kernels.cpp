// Serial reference kernels vs their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include "mfnet/batch.hpp"
#include "mfnet/dynamics.hpp"
#include "mfnet/kernels.hpp"

using namespace mfnet;

namespace {

ParticleEnsemble make_rbf(int n, int d) {
  InitSpec init;
  init.c = {CLaw::Kind::Uniform, -1.0, 1.0, 1.0};
  return init_ensemble(init, Unit::rbf(1.0, d), n, RngStream(7, 1));
}

ParticleEnsemble make_sigmoid(int n, int d) {
  InitSpec init;
  init.c = {CLaw::Kind::Uniform, -1.0, 1.0, 1.0};
  return init_ensemble(init, Unit::sigmoid(d), n, RngStream(7, 2));
}

template <bool Omp>
void BM_RbfSums(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Target target(SpinTensor::random(5, 3));
  const auto e = make_rbf(n, 5);
  kernels::RbfSums out;
  for (auto _ : state) {
    if constexpr (Omp) kernels::omp::rbf_sums(e, target, out);
    else kernels::serial::rbf_sums(e, target, out);
    benchmark::DoNotOptimize(out.kc.data());
  }
  state.SetComplexityN(n);
}

template <bool Omp>
void BM_BatchSums(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = 10;
  const Target target(SpinTensor::random(d, 3));
  const auto e = make_sigmoid(n, d);
  const Batch batch = draw_batch(target, (n / 5) * (n / 5), RngStream(9, 9));
  kernels::BatchSums out;
  for (auto _ : state) {
    if constexpr (Omp) kernels::omp::batch_sums(e, batch, out);
    else kernels::serial::batch_sums(e, batch, out);
    benchmark::DoNotOptimize(out.gz.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * batch.size());
}

template <bool Omp>
void BM_NetworkOnBatch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto e = make_rbf(n, 5);
  const Batch batch = draw_points(5, 100000, RngStream(11, 1));
  std::vector<double> out(batch.size());
  for (auto _ : state) {
    if constexpr (Omp) kernels::omp::network_on_batch(e, batch, out);
    else kernels::serial::network_on_batch(e, batch, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_RbfSums<false>)->Name("rbf_sums/serial")->RangeMultiplier(2)->Range(16, 256);
BENCHMARK(BM_RbfSums<true>)->Name("rbf_sums/omp")->RangeMultiplier(2)->Range(16, 256);
BENCHMARK(BM_BatchSums<false>)->Name("batch_sums/serial")->RangeMultiplier(2)->Range(64, 256);
BENCHMARK(BM_BatchSums<true>)->Name("batch_sums/omp")->RangeMultiplier(2)->Range(64, 256);
BENCHMARK(BM_NetworkOnBatch<false>)->Name("network_on_batch/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_NetworkOnBatch<true>)->Name("network_on_batch/omp")->Arg(64)->Arg(256);

BENCHMARK_MAIN();
