// Serial reference vs OpenMP path for the parallel kernels.

#include <benchmark/benchmark.h>

#include "zrlab/equilibria.hpp"
#include "zrlab/harris.hpp"
#include "zrlab/pde.hpp"

using namespace zrlab;

namespace {

Execution mode_of(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

const FluxTable& tasep() {
  static const FluxTable f = FluxTable::from_function([](double r) { return r * (1 - r); }, 1.0, 2000);
  return f;
}

void BM_Godunov(benchmark::State& state) {
  GodunovOptions opt;
  opt.mode = mode_of(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(godunov_solve(Profile::step(1, 0), tasep(), -1, 1, 5e-4, 0.5, opt));
  }
}

void BM_LaxOleinik(benchmark::State& state) {
  const auto x = cell_centers(-1, 1, 2e-3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lax_oleinik_solve(Profile::step(0.2, 0.8), tasep(), x, 0.5, mode_of(state)));
  }
}

void BM_Harris(benchmark::State& state) {
  const std::size_t L = 100000;
  const auto field = sample_rate_field(DisorderLaw::shifted_beta(0.5, 2, 1), L, 1);
  const auto init = sample_product_measure(QuenchedProductLaw(0.4, field, RateFunction::geometric()), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_harris(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), init, 10, 0.0, 3, mode_of(state)));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * L * 10));
}

}  // namespace

BENCHMARK(BM_Godunov)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LaxOleinik)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Harris)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
