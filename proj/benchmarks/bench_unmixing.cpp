#include "hsu/evaluation.hpp"
#include "hsu/graph.hpp"
#include "hsu/initializers.hpp"
#include "hsu/solvers.hpp"
#include "hsu/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <string>

namespace {

const hsu::SyntheticScene& scene(hsu::Index z) {
  static std::map<hsu::Index, hsu::SyntheticScene> cache;
  auto it = cache.find(z);
  if (it == cache.end()) {
    hsu::SceneConfig c;
    c.z = z;
    c.k = 5;
    c.bands = 224;
    c.snr_db = 30.0;
    c.seed = 7;
    it = cache.emplace(z, hsu::generate_scene(c)).first;
  }
  return it->second;
}

void BM_Fcls(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(hsu::fcls(s.x, s.m_true).data.data());
  state.SetItemsProcessed(state.iterations() * s.x.pixels());
}
BENCHMARK(BM_Fcls)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Vca(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(hsu::vca(s.x, 5, 1).pixel_indices.data());
}
BENCHMARK(BM_Vca)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Step(benchmark::State& state) {
  const auto& s = scene(8);
  const auto v = static_cast<hsu::Variant>(state.range(0));
  const hsu::InitPair init = hsu::init_pair(s.x, 5, 1);
  hsu::SolverConfig cfg;
  cfg.lambda = 0.1;
  cfg.alpha = 0.1;
  cfg.sigma = 1.0;
  cfg.asc_delta = hsu::default_asc_delta(s.x.data);
  hsu::LaplacianPair g;
  hsu::SolveContext ctx;
  if (hsu::needs_graph(v)) {
    g = hsu::build_graph(s.x, {});
    ctx.graph = &g;
  }
  const hsu::PcaBasis pca = hsu::principal_subspace(s.x.data, 4);
  const hsu::SolverState s0 = hsu::make_state(init.endmembers, init.abundances, v, ctx);
  for (auto _ : state) benchmark::DoNotOptimize(hsu::step(s0, s.x.data, v, cfg, ctx, &pca).a.data());
  state.SetLabel(std::string(hsu::to_string(v)));
}
BENCHMARK(BM_Step)->DenseRange(0, 10)->Unit(benchmark::kMillisecond);

void BM_BuildGraph(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(hsu::build_graph(s.x, {}).sigma_w);
}
BENCHMARK(BM_BuildGraph)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Match(benchmark::State& state) {
  const hsu::Index k = state.range(0);
  const hsu::Matrix a = hsu::Matrix::Random(100, k).cwiseAbs();
  const hsu::Matrix b = hsu::Matrix::Random(100, k).cwiseAbs();
  for (auto _ : state) benchmark::DoNotOptimize(hsu::match_endmembers(a, b).data());
}
BENCHMARK(BM_Match)->Arg(5)->Arg(10)->Arg(15);

}  // namespace

BENCHMARK_MAIN();
