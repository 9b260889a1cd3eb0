#include <benchmark/benchmark.h>

#include "fibrefix/detfix.hpp"
#include "fibrefix/problems.hpp"
#include "fibrefix/randfix.hpp"

namespace {

using namespace fibrefix;

void BM_OrbitRational(benchmark::State& state) {
  const FibreMap map = build_fibre({"rational_radial", {}}, FibreSet::ball(1, 1.0));
  const auto steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(orbit(map, Point{1.0}, {.n_max = steps}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OrbitRational)->Arg(1000)->Arg(10000);

void BM_SolveGenerated(benchmark::State& state) {
  const auto prob = generate(7, {.atoms = static_cast<std::size_t>(state.range(0)), .dim = 3});
  const RandomMap f = build(prob);
  const auto ledger = verify_hypotheses(f, {.seed = prob.seed});
  const Section x0 = Section::zero(f.space(), f.dim());
  const SolveOptions options{.threads = static_cast<std::size_t>(state.range(1))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(f, x0, options, &ledger));
  }
}
BENCHMARK(BM_SolveGenerated)->Args({8, 1})->Args({64, 1})->Args({64, 4})->Unit(benchmark::kMillisecond);

void BM_VerifyHypotheses(benchmark::State& state) {
  const auto prob = generate(11, {.atoms = static_cast<std::size_t>(state.range(0)), .dim = 2});
  const RandomMap f = build(prob);
  for (auto _ : state) {
    benchmark::DoNotOptimize(verify_hypotheses(f, {.seed = prob.seed}));
  }
}
BENCHMARK(BM_VerifyHypotheses)->Arg(4)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_LocateUniformityN(benchmark::State& state) {
  const FibreMap map = build_fibre({"rational_radial", {}}, FibreSet::ball(2, 1.0));
  const auto region = map.set().probe_points(64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(locate_uniformity_N(map.phi_n(), map.phi(), region, 1e-3));
  }
}
BENCHMARK(BM_LocateUniformityN)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
