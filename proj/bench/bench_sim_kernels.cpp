// Serial reference kernel against the OpenMP kernel on the same workload.
#include <benchmark/benchmark.h>

#include <array>

#include "divcap/sim_kernels.hpp"

namespace {

const divcap::RateCap& reference_cap() {
  static const std::array<double, 2> coeffs{0.5, 0.5};
  static const divcap::RateCap cap = divcap::make_rate_cap(divcap::CapKind::Affine, coeffs);
  return cap;
}

divcap::KernelSpec spec(divcap::Boundary boundary) {
  divcap::KernelSpec s;
  s.mu = 1.0;
  s.sigma = 1.0;
  s.q = 1.0;
  s.cap = &reference_cap();
  s.b = 0.12;
  s.x0 = 0.12;
  s.boundary = boundary;
  s.dt = 1e-3;
  s.n_steps = 4000;
  s.seed = 7;
  return s;
}

void BM_Serial(benchmark::State& state) {
  const auto s = spec(static_cast<divcap::Boundary>(state.range(1)));
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(divcap::simulate_serial(s, n));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Parallel(benchmark::State& state) {
  const auto s = spec(static_cast<divcap::Boundary>(state.range(1)));
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(divcap::simulate_parallel(s, n));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

// range(1): 0 absorbed, 1 reflected
BENCHMARK(BM_Serial)->Args({2000, 0})->Args({2000, 1})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Parallel)->Args({2000, 0})->Args({2000, 1})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
