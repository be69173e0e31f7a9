#include <benchmark/benchmark.h>

#include <cmath>

#include "absorb/fredholm.hpp"
#include "absorb/montecarlo.hpp"
#include "absorb/stencil.hpp"

using namespace absorb;

namespace {

DomainGrid square(std::size_t n) {
  const double lo[] = {0, 0}, hi[] = {1, 1};
  const std::size_t cells[] = {n, n};
  return make_grid(2, lo, hi, cells);
}

const DiffusionModel& model2d() {
  static const DiffusionModel m =
      linear_drift_model(2, {1.0, 2.0}, {0.5, 0.5}, {{{1.0, 0.2}, {0.0, 0.8}}});
  return m;
}

template <bool Parallel>
void BM_Stencil(benchmark::State& state) {
  const DomainGrid g = square(static_cast<std::size_t>(state.range(0)));
  const StencilOperator op = assemble_operator(model2d(), g, 0.0);
  const DensityField x = sample(g, [](const Point& p) { return std::sin(3 * p[0]) * p[1]; });
  DensityField y(g);
  for (auto _ : state) {
    if constexpr (Parallel) apply_parallel(op, x.data(), y.data());
    else apply_serial(op, x.data(), y.data());
    benchmark::DoNotOptimize(y.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.size()));
}

template <bool Parallel>
void BM_AssembleQ(benchmark::State& state) {
  const DomainGrid g = make_interval(0, 1, static_cast<std::size_t>(state.range(0)));
  const DiffusionModel m = constant_model(1, {1.0, 0}, {{{1, 0}, {0, 0}}});
  SolverConfig c;
  c.n_steps = 64;
  for (auto _ : state) {
    OperatorMatrix q = Parallel ? assemble_Q(m, g, c, 0.1) : assemble_Q_serial(m, g, c, 0.1);
    benchmark::DoNotOptimize(q.q.data());
  }
}

template <bool Parallel>
void BM_Simulate(benchmark::State& state) {
  const DomainGrid g = square(32);
  const DensityField rho = sample(g, [](const Point&) { return 1.0; });
  const ParticleEnsemble e0 =
      sample_initial(rho, static_cast<std::size_t>(state.range(0)), 42);
  for (auto _ : state) {
    ParticleEnsemble e = Parallel ? simulate(model2d(), g, e0, 0.05, 1e-3)
                                  : simulate_serial(model2d(), g, e0, 0.05, 1e-3);
    benchmark::DoNotOptimize(e.positions.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Stencil<false>)->Name("stencil/serial")->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_Stencil<true>)->Name("stencil/parallel")->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_AssembleQ<false>)->Name("assemble_Q/serial")->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleQ<true>)->Name("assemble_Q/parallel")->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate<false>)->Name("simulate/serial")->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate<true>)->Name("simulate/parallel")->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
