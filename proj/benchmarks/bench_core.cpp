#include <benchmark/benchmark.h>

#include "nlevo/regularized_functional.hpp"
#include "nlevo/wide_driver.hpp"

using namespace nlevo;

namespace {

struct Instance {
  KernelSpec spec;
  ProblemData problem;
  Trajectory u;
};

Instance make_instance(std::size_t M, std::size_t K) {
  const auto spec = KernelSpec::pure(2.0, 0.5);
  const auto g = build_grid(1.0, M);
  Instance in{spec, make_problem(g, sample_datum(g, DatumShape::Bump, 1.0, 1.0), spec), {}};
  in.u = Trajectory(in.problem.grid, K, kHorizonFactor * 0.2);
  in.u.fill_from_datum(in.problem.u0, true);
  return in;
}

}  // namespace

static void BM_EnergyGradient(benchmark::State& state) {
  const auto in = make_instance(static_cast<std::size_t>(state.range(0)), 2);
  const DiscreteEnergy E(in.spec, in.problem.grid);
  std::vector<double> g(in.problem.grid.size());
  for (auto _ : state) benchmark::DoNotOptimize(E.value_and_gradient(in.problem.u0, g));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EnergyGradient)->RangeMultiplier(2)->Range(32, 256)->Complexity(benchmark::oNSquared);

static void BM_FunctionalGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto in = make_instance(n, n);
  const DiscreteEnergy E(in.spec, in.problem.grid);
  const RegularizedFunctional F(make_params(0.05, in.u, in.problem.lambda_disc, 0.0), E);
  std::vector<double> g(in.u.free_size());
  for (auto _ : state) benchmark::DoNotOptimize(F.value_and_gradient(in.u, g, true));
}
BENCHMARK(BM_FunctionalGradient)->Arg(32)->Arg(64)->Arg(128);

static void BM_LadderRung(benchmark::State& state) {
  const auto in = make_instance(64, 64);
  WideOptions o;
  o.K = 64;
  o.T = kHorizonFactor * 0.2;
  for (auto _ : state) benchmark::DoNotOptimize(solve_rung(0.05, in.problem, in.spec, o).F);
}
BENCHMARK(BM_LadderRung)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
