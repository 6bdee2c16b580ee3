#include <benchmark/benchmark.h>

#include "nqs/curvature.hpp"
#include "nqs/nlayer.hpp"
#include "nqs/qlayer.hpp"

using namespace nqs;

static void BM_GeneratorExponential(benchmark::State& state) {
  const Superoperator l = build_superoperator(random_gkls(state.range(0), 1));
  for (auto _ : state) benchmark::DoNotOptimize(matrix_exponential(l.matrix(), 0.7));
}
BENCHMARK(BM_GeneratorExponential)->Arg(2)->Arg(4)->Arg(8);

static void BM_StationaryState(benchmark::State& state) {
  const Superoperator l = build_superoperator(random_gkls(state.range(0), 2));
  for (auto _ : state) benchmark::DoNotOptimize(stationary_state(l));
}
BENCHMARK(BM_StationaryState)->Arg(2)->Arg(4)->Arg(8);

static void BM_DoeblinEpsilon(benchmark::State& state) {
  const Superoperator l = build_superoperator(random_gkls(state.range(0), 3));
  const double t0 = 1.0 / spectral_gap(l);
  for (auto _ : state) benchmark::DoNotOptimize(doeblin_epsilon(l, t0));
}
BENCHMARK(BM_DoeblinEpsilon)->Arg(2)->Arg(4)->Arg(8);

static void BM_SolvePoisson(benchmark::State& state) {
  const Index d = state.range(0);
  const Superoperator l = build_superoperator(random_gkls(d, 4));
  const Superoperator dl = build_superoperator(random_gkls(d, 5)) - build_superoperator(random_gkls(d, 6));
  for (auto _ : state) benchmark::DoNotOptimize(solve_poisson(l, dl));
}
BENCHMARK(BM_SolvePoisson)->Arg(2)->Arg(4)->Arg(8);

static void BM_SolveChainGraph(benchmark::State& state) {
  const Index n = state.range(0);
  const ContextGraph g = path_graph(n, 0.5);
  std::map<std::string, VertexFunctional> f;
  for (Index i = 0; i < n; ++i) {
    f.emplace(g.vertices()[i].id, QuadraticFunctional(RMatrix::Identity(1, 1), RVector::Constant(1, i % 2)));
  }
  const GlobalActionSpec spec{g, f, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(solve_self_consistent(spec));
}
BENCHMARK(BM_SolveChainGraph)->Arg(16)->Arg(128)->Arg(512);

static void BM_QutritHolonomyFit(benchmark::State& state) {
  const CartanSet c = gell_mann_cartan();
  const LoopBuilder loop = unitary_round_trip(gell_mann(1), c);
  for (auto _ : state) benchmark::DoNotOptimize(holonomy_fit(loop, {0.1, 0.05, 0.025}, 2));
}
BENCHMARK(BM_QutritHolonomyFit);
BENCHMARK_MAIN();
