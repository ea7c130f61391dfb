#include <benchmark/benchmark.h>

#include "treekt/treekt.hpp"

namespace {

using namespace treekt;

struct Instance {
  ConceptTree tree;
  Parameters params;
  ObservationSet obs;
};

Instance make_instance(std::size_t nodes, std::size_t responses) {
  Rng rng(derive_seed(17, nodes * 131 + responses));
  auto tree = random_tree(nodes, rng);
  auto params = random_parameters(tree, rng);
  auto obs = random_observations(tree, responses, rng);
  return {std::move(tree), std::move(params), std::move(obs)};
}

void BM_UpwardPass(benchmark::State& state) {
  const auto in = make_instance(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(upward_pass(in.tree, in.params, in.obs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_UpwardPass)->ArgsProduct({{10, 100, 1000}, {10, 1000}});

void BM_DownwardPass(benchmark::State& state) {
  const auto in = make_instance(state.range(0), state.range(1));
  const auto up = upward_pass(in.tree, in.params, in.obs);
  for (auto _ : state) benchmark::DoNotOptimize(downward_pass(in.tree, in.params, up));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DownwardPass)->ArgsProduct({{10, 100, 1000}, {10, 1000}});

void BM_Posteriors(benchmark::State& state) {
  const auto in = make_instance(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(posteriors(in.tree, in.params, in.obs));
}
BENCHMARK(BM_Posteriors)->ArgsProduct({{10, 100, 1000}, {10, 1000}});

void BM_EStep(benchmark::State& state) {
  Rng rng(23);
  const auto tree = random_tree(50, rng);
  const auto params = random_parameters(tree, rng);
  std::vector<ObservationSet> data;
  for (int i = 0; i < state.range(0); ++i) data.push_back(random_observations(tree, 50, rng));
  const DatasetView view{std::span<const ObservationSet>(data)};
  const auto threads = static_cast<unsigned>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(e_step(tree, params, view, threads));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EStep)->ArgsProduct({{100, 1000}, {1, 4}})->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
