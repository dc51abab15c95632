#include <random>

#include <benchmark/benchmark.h>

#include "oracles.hpp"
#include "weylscope/berry.hpp"
#include "weylscope/eig.hpp"
#include "weylscope/nodes.hpp"
#include "weylscope/surface.hpp"

using namespace weylscope;

static void BM_eigh(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const ComplexMatrix h = oracle::random_hermitian(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eigh(h));
}
BENCHMARK(BM_eigh)->Arg(2)->Arg(16)->Arg(80)->Arg(160);

static void BM_eigh2(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const ComplexMatrix h = oracle::random_hermitian(rng, 2);
  for (auto _ : state) benchmark::DoNotOptimize(eigh2(h));
}
BENCHMARK(BM_eigh2);

static void BM_surface_spectrum(benchmark::State& state) {
  const auto model = minimal_model(0.0);
  SlabConfig config;
  config.depth = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(surface_spectrum(model, config, SurfaceMomentum(0.2, 0.3), {-0.3, 0.3}));
}
BENCHMARK(BM_surface_spectrum)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

static void BM_chern_slice(benchmark::State& state) {
  const auto model = minimal_model(0.0);
  const int grid = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(chern_number_slice(model, 1, 3, 0.0, grid));
}
BENCHMARK(BM_chern_slice)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);

static void BM_find_nodes(benchmark::State& state) {
  const auto model = minimal_model(0.3);
  FindNodesOptions options;
  options.grid = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(find_nodes(model, 1, options));
}
BENCHMARK(BM_find_nodes)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_spectral_flow(benchmark::State& state) {
  const auto model = minimal_model(0.0);
  SlabConfig config;
  const SurfaceLoop loop = circle_loop(0.0, kPi / 2, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_flow(model, config, loop, 200));
}
BENCHMARK(BM_spectral_flow)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
