// Copyright 2026 The gridcache Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "gridcache/harness.h"
#include "gridcache/learner.h"
#include "gridcache/oracle.h"
#include "gridcache/perspective.h"
#include "support.h"

using namespace gridcache;

namespace {

void BM_LineOfSightField(benchmark::State& state) {
  const auto scene = support::room9();
  const ObjectStates states = ObjectStates::initial(*scene);
  const auto poses = reachable_poses(*scene);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(view_window(*scene, states, poses[k++ % poses.size()]));
  }
}
BENCHMARK(BM_LineOfSightField);

void BM_EnumerateSpots(benchmark::State& state) {
  Rng rng(1);
  GeneratorConfig cfg;
  cfg.min_size = cfg.max_size = static_cast<int>(state.range(0));
  const Scene scene = generate_scene("bench", rng, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_spots(scene, GoalType::kCup));
}
BENCHMARK(BM_EnumerateSpots)->Arg(9)->Arg(15);

void BM_BfsSeek(benchmark::State& state) {
  const auto scene = support::room9();
  const auto spots = enumerate_spots(*scene, GoalType::kCup);
  std::size_t k = 0;
  for (auto _ : state) {
    const HidingSpot& s = spots[k++ % spots.size()];
    benchmark::DoNotOptimize(bfs_seek(*scene, s.placement(), scene->start_pose().cell()));
  }
}
BENCHMARK(BM_BfsSeek);

void BM_MentalRollouts(benchmark::State& state) {
  const auto scene = support::room9();
  const auto spots = enumerate_spots(*scene, GoalType::kCup);
  const RolloutConfig cfg{static_cast<int>(state.range(0)), 500, 0.2};
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mental_rollouts(*scene, spots[0].placement(), scene->start_pose(), cfg, rng));
  }
}
BENCHMARK(BM_MentalRollouts)->Arg(8)->Arg(100);

void BM_Featurize(benchmark::State& state) {
  const GameState g = start_game(support::room9(), GoalType::kCup, 1);
  for (auto _ : state) benchmark::DoNotOptimize(featurize(g));
}
BENCHMARK(BM_Featurize);

void BM_RandomMatch(benchmark::State& state) {
  const auto scene = support::room9();
  ReportConfig cfg;
  cfg.percentile_rollouts = 10;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    RandomPolicy hider;
    ExploringSeeker seeker;
    benchmark::DoNotOptimize(run_match(scene, GoalType::kTomato, hider, seeker, seed++, {}, cfg));
  }
}
BENCHMARK(BM_RandomMatch)->Unit(benchmark::kMillisecond);

void BM_TrainEpisode(benchmark::State& state) {
  LearnerConfig cfg;
  cfg.percentile_rollouts = 20;
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(cfg, {support::room9()}, 1, seed++));
}
BENCHMARK(BM_TrainEpisode)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
