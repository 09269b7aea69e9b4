#include <benchmark/benchmark.h>

#include "ilhte/dgp.hpp"
#include "ilhte/expand.hpp"
#include "ilhte/glmm.hpp"

using namespace ilhte;

namespace {

BinaryTable simulated(int n_persons, int n_items) {
  Condition c;
  c.n_persons = n_persons;
  c.n_items = n_items;
  c.k = 3;
  c.sigma_zeta = 0.4;
  c.rho = -0.5;
  const TrueParams p = draw_true_params(c, 11);
  return expand_adjacent(simulate_dataset(p, n_persons, n_items, 3, 12), Expansion::Rsm);
}

void bm_laplace_deviance(benchmark::State& state) {
  const BinaryTable bt = simulated(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  ModelSpec spec;
  spec.kind = ModelKind::RsmIlhte;
  const DesignMatrices dm = build_design(bt, spec);
  LaplaceEngine engine(dm);
  const auto vs = VarianceStructure::from_theta({0.5, 1.0, -0.2, 0.35}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(engine.solve(vs).laplace_deviance());
  state.counters["rows"] = static_cast<double>(dm.n_rows());
}

void bm_fit(benchmark::State& state, ModelKind kind) {
  const BinaryTable bt = simulated(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  ModelSpec spec;
  spec.kind = kind;
  for (auto _ : state) benchmark::DoNotOptimize(fit_glmm(bt, spec).loglik);
}

void bm_expand(benchmark::State& state) {
  Condition c;
  c.n_persons = static_cast<int>(state.range(0));
  c.n_items = 20;
  c.k = 5;
  const TrueParams p = draw_true_params(c, 3);
  const LongTable t = simulate_dataset(p, c.n_persons, c.n_items, c.k, 4);
  for (auto _ : state) benchmark::DoNotOptimize(expand_adjacent(t, Expansion::Rsm).rows.size());
}

}  // namespace

BENCHMARK(bm_laplace_deviance)->Args({500, 20})->Args({1000, 20})->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_fit, constant, ModelKind::RsmConstant)->Args({500, 20})->Args({1000, 20})->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_fit, item_slopes, ModelKind::RsmIlhte)->Args({500, 20})->Args({1000, 20})->Unit(benchmark::kMillisecond);
BENCHMARK(bm_expand)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
