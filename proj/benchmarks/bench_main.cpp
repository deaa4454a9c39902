#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "qdag/graph.hpp"
#include "qdag/quantile_loss.hpp"
#include "qdag/sampler.hpp"
#include "qdag/simdata.hpp"
#include "qdag/splines.hpp"

namespace {

std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  for (auto& x : v) x = z(gen);
  return v;
}

void BM_SplineBasis(benchmark::State& state) {
  const auto x = normal_sample(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(qdag::make_spline_basis(x, 0, 20));
}
BENCHMARK(BM_SplineBasis)->Arg(100)->Arg(500)->Arg(2000);

void BM_NodeLoglik(benchmark::State& state) {
  const auto y = normal_sample(static_cast<std::size_t>(state.range(0)), 2);
  const auto f = normal_sample(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(qdag::node_loglik(y, f, qdag::QuantileLevel(0.3)));
}
BENCHMARK(BM_NodeLoglik)->Arg(100)->Arg(1000)->Arg(10000);

void BM_CycleCheck(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  qdag::Adjacency a(p);
  // a dense lower-triangular DAG: every test edge must search the graph
  for (int h = 0; h < p; ++h)
    for (int j = h + 1; j < p; ++j)
      if ((h + j) % 3 == 0) a.set(h, j);
  for (auto _ : state) benchmark::DoNotOptimize(qdag::creates_cycle(a, p - 1, 0));
}
BENCHMARK(BM_CycleCheck)->Arg(10)->Arg(25)->Arg(100);

void BM_ChainSweeps(benchmark::State& state) {
  qdag::SimSettings s;
  s.p = static_cast<int>(state.range(0));
  s.n = 100;
  s.seed = 4;
  const qdag::SimDataset ds = qdag::simulate(s);
  qdag::SamplerConfig cfg = qdag::SamplerConfig::defaults(qdag::SamplerMode::qdagx);
  cfg.iters = 50;
  cfg.burnin = 25;
  cfg.thin = 5;
  for (auto _ : state) benchmark::DoNotOptimize(qdag::run_chain(ds.y, ds.x, qdag::QuantileLevel(0.5), cfg));
  state.SetItemsProcessed(state.iterations() * cfg.iters);
}
BENCHMARK(BM_ChainSweeps)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
