#include <benchmark/benchmark.h>

#include "treekt/treekt.hpp"

namespace {

using namespace treekt;

// Cost of one observe call: one EM iteration over the update dataset.
void BM_Observe(benchmark::State& state) {
  Rng rng(31);
  auto tree = std::make_shared<const ConceptTree>(random_tree(20, rng));
  BurnInData burn_in;
  for (int i = 0; i < state.range(0); ++i) {
    burn_in.emplace_back("s" + std::to_string(i), random_observations(*tree, 10, rng));
  }
  auto session = ClassroomSession::burn_in_fit(tree, std::move(burn_in));
  const Interaction x{"q", tree->leaves().front(), Difficulty::kMedium, true};
  for (auto _ : state) session.observe("s0", x);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Observe)->Arg(10)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_PredictNext(benchmark::State& state) {
  Rng rng(37);
  auto tree = std::make_shared<const ConceptTree>(random_tree(20, rng));
  BurnInData burn_in{{"s0", random_observations(*tree, state.range(0), rng)}};
  auto session = ClassroomSession::burn_in_fit(tree, std::move(burn_in));
  const QuestionMeta q{"q", tree->leaves().front(), Difficulty::kEasy, std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(session.predict_next("s0", q));
}
BENCHMARK(BM_PredictNext)->Arg(10)->Arg(1000);

}  // namespace
