// Timing of the hot paths: dual solve, B evaluation, inner minimization, recursion and field sampling.
#include <benchmark/benchmark.h>

#include "elman/functionals.hpp"
#include "elman/kdual.hpp"
#include "elman/lattice.hpp"
#include "elman/montecarlo.hpp"
#include "elman/optimize.hpp"
#include "elman/rpc.hpp"

using namespace elman;

namespace {

// Periodic ring of n sites with unit hopping and mass 0.5.
SphericalModelSpec ring(int n) {
  LatticeSpec lat;
  lat.L = n;
  lat.d = 1;
  lat.mu = 0.5;
  SphericalModelSpec s;
  s.D = build_coupling(lat).entries;
  s.xi.assign(n, MixingFunction{{0.0, 0.0, 0.5}});
  s.h = Vector::Constant(n, 0.1);
  return s;
}

TalagrandProfile two_level(Eigen::Index n) {
  TalagrandProfile p;
  p.m = {0.0, 0.4, 1.0};
  p.s.resize(n, 2);
  p.s.col(0).setConstant(0.3);
  p.s.col(1).setConstant(0.7);
  return p;
}

void BM_SolveK(benchmark::State& state) {
  const auto spec = ring(static_cast<int>(state.range(0)));
  const Vector u = Vector::Constant(spec.sites(), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_K(spec.D, u));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveK)->RangeMultiplier(2)->Range(2, 64)->Complexity();

void BM_EvalBDiscrete(benchmark::State& state) {
  const auto spec = ring(static_cast<int>(state.range(0)));
  const auto p = two_level(spec.sites());
  for (auto _ : state) benchmark::DoNotOptimize(eval_B_discrete(spec, p));
}
BENCHMARK(BM_EvalBDiscrete)->RangeMultiplier(2)->Range(2, 32);

void BM_MinimizeS(benchmark::State& state) {
  const auto spec = ring(static_cast<int>(state.range(0)));
  OptimizeOptions opt;
  opt.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(minimize_s(spec, two_level(spec.sites()), Target::B, opt));
}
BENCHMARK(BM_MinimizeS)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_YbRecursion(benchmark::State& state) {
  const auto spec = ring(static_cast<int>(state.range(0)));
  PanchenkoProfile p;
  p.t = {0.3, 0.6, 1.0};
  p.q = Matrix::Constant(spec.sites(), 1, 0.5);
  const Vector b = Vector::Constant(spec.sites(), 8.0);
  RecursionOptions opt;
  opt.nodes = 12;
  opt.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(y_b_numeric(spec, p, b, spec.h, opt));
}
BENCHMARK(BM_YbRecursion)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_SampleSpherical(benchmark::State& state) {
  const MixingFunction xi{{0.0, 0.5, 0.5, 0.25}};
  std::uint64_t index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_spherical_H(xi, static_cast<int>(state.range(0)), 1, index++));
}
BENCHMARK(BM_SampleSpherical)->Arg(4)->Arg(16);

void BM_SampleEuclidean(benchmark::State& state) {
  CorrelationFunction B;
  B.atoms = {{1.0, 1.0}, {0.5, 3.0}};
  std::uint64_t index = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_euclidean_V(B, 4, static_cast<int>(state.range(0)), 1, index++));
}
BENCHMARK(BM_SampleEuclidean)->Arg(512)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
