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

#include <set>

#include "doctest.h"
#include "gridcache/error.h"
#include "gridcache/harness.h"
#include "gridcache/rewards.h"
#include "oracles.h"
#include "reward_goldens.h"
#include "support.h"

using namespace gridcache;

namespace {

// E&M random walk of n steps; returns the game.
GameState random_walk(std::shared_ptr<const Scene> scene, std::uint64_t seed, int n) {
  GameState g = start_game(std::move(scene), GoalType::kCup, seed, GameLimits{n, 10, 15, 50, 500});
  Rng rng(seed);
  const auto& kinds = legal_actions(Stage::kEM);
  while (g.stage == Stage::kEM) {
    Action a = Action::simple(kinds[rng.below(kinds.size())]);
    if (a.kind == ActionKind::kOpenAt) a = Action::open_at(1 + rng.below(7), 1 + rng.below(7));
    apply_action(g, a);
  }
  return g;
}

std::set<oracle::Cell> cells_of(const std::set<std::tuple<int, int, int>>& s) {
  std::set<oracle::Cell> out;
  for (const auto& [x, z, k] : s) out.insert({x, z});
  return out;
}

}  // namespace

TEST_CASE("reward goldens") {
  for (const goldens::Case& c : goldens::all()) {
    CAPTURE(c.name);
    CHECK(c.got == c.want);
  }
}

TEST_CASE("documented example values") {
  auto cases = goldens::all();
  auto find = [&](const std::string& name) {
    for (const auto& c : cases) {
      if (c.name == name) return c.got;
    }
    FAIL("missing golden " << name);
    return 0.0;
  };
  CHECK(find("em failed OpenAt clamps") == -0.001);
  CHECK(find("oh PlaceAt p=1") == 0.015);
  CHECK(find("om exact Behind hit") == 2.99);
  CHECK(find("s successful claim") == 0.99);
  CHECK(find("om OnTop at distance 2") == 0.0525);
  CHECK(find("om drop off window") == -1.01);
  CHECK(find("s false claim") == doctest::Approx(-0.06).epsilon(1e-15));
  CHECK(find("oh PlaceAt p=0.1") == 0.51);
}

TEST_CASE("oh_reward rejects probabilities outside the unit interval") {
  auto t = goldens::trace(Stage::kOH, {goldens::step(ActionKind::kPlaceAt, true)});
  CHECK_THROWS_AS(oh_reward(t, 0, 1.5, std::nullopt), PreconditionError);
  CHECK_THROWS_AS(oh_reward(t, 0, -0.1, std::nullopt), PreconditionError);
}

TEST_CASE("percentile is bounded and monotone") {
  Rng rng(4);
  std::vector<int> lengths;
  for (int k = 0; k < 100; ++k) lengths.push_back(1 + static_cast<int>(rng.below(300)));
  double last = -2.0;
  for (int s = 0; s <= 310; ++s) {
    const double p = oh_percentile(s, lengths);
    CHECK(p >= -1.0);
    CHECK(p <= 1.0);
    CHECK(p >= last);
    last = p;
  }
  CHECK_THROWS_AS(oh_percentile(1, std::vector<int>{}), PreconditionError);
}

TEST_CASE("exploration traces against set arithmetic") {
  const auto scene = support::room9();
  const SceneDescription& d = scene->description();
  const auto reach = oracle::reachable(d);
  const std::set<oracle::Cell> reach_set(reach.begin(), reach.end());
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const GameState g = random_walk(scene, seed, 120);
    const StageTraces traces = stage_traces(g);
    const ExplorationTrace& em = traces.em;

    std::set<std::tuple<int, int, int>> visited{{g.em_start.x, g.em_start.z, g.em_start.standing}};
    std::set<std::tuple<int, int, int>> extrap;
    std::set<std::size_t> opened;
    auto add_extrap = [&](const Pose& p) {
      extrap.insert({p.x, p.z, p.standing});
      const int deg = degrees(p.rotation);
      const oracle::Cell f = oracle::facing(deg);
      const oracle::Cell r = oracle::right_hand(deg);
      for (int side : {-1, 0, 1}) {
        const oracle::Cell c{p.x + f.x + side * r.x, p.z + f.z + side * r.z};
        if (oracle::inside(d, c)) extrap.insert({c.x, c.z, p.standing});
      }
    };
    add_extrap(g.em_start);
    for (const StepRecord& r : g.history) {
      visited.insert({r.pose_after.x, r.pose_after.z, r.pose_after.standing});
      add_extrap(r.pose_after);
      opened.insert(r.opened.begin(), r.opened.end());
    }
    std::size_t extrap_hits = 0;
    for (const auto& t : extrap) {
      if (reach_set.count({std::get<0>(t), std::get<1>(t)})) ++extrap_hits;
    }
    const ExplorationMetrics m = exploration_metrics(em, *scene);
    CHECK(m.coverage == static_cast<double>(visited.size()) / (2.0 * reach.size()));
    CHECK(m.coverage_plus == static_cast<double>(extrap_hits) / (2.0 * reach.size()));
    CHECK(m.open_pct == static_cast<double>(opened.size()) / 2.0);
    CHECK(m.coverage_plus >= m.coverage);
    CHECK(cells_of(visited).size() <= reach.size());

    // Visited and extrapolated sets only grow, and E contains V.
    for (const Pose& p : em.visited) CHECK(em.extrapolated.count(p) == 1);
    std::set<Pose> seen{g.em_start};
    for (std::size_t t = 0; t < em.steps.size(); ++t) {
      const TraceStep& s = em.steps[t];
      CHECK(s.new_location == seen.insert(s.pose_after).second);
      const double r = em_reward(em, t);
      CHECK(r == em_reward(em, t));
      if (s.action.kind == ActionKind::kOpenAt) CHECK(r >= -0.001);
    }
  }
}

TEST_CASE("an agent that never moves covers one projected tuple") {
  const auto scene = support::room9();
  GameState g = start_game(scene, GoalType::kCup, 1, GameLimits{4, 10, 15, 50, 500});
  for (int k = 0; k < 4; ++k) apply_action(g, Action::simple(ActionKind::kRotateLeft));
  const ExplorationMetrics m = exploration_metrics(stage_traces(g).em, *scene);
  CHECK(m.coverage == 1.0 / (2.0 * reachable_cells(*scene).size()));
  CHECK(m.open_pct == 0.0);
}

TEST_CASE("open percentage is one without openables") {
  const Scene s = build_scene(support::open_room_text(5, 5));
  auto scene = std::make_shared<const Scene>(s);
  GameState g = start_game(scene, GoalType::kCup, 1, GameLimits{1, 10, 15, 50, 500});
  apply_action(g, Action::simple(ActionKind::kRotateLeft));
  CHECK(exploration_metrics(stage_traces(g).em, *scene).open_pct == 1.0);
}

TEST_CASE("hiding metrics") {
  const auto scene = support::room9();
  ObjectStates states = ObjectStates::initial(*scene);
  const std::size_t fridge = *scene->object_index("fridge");
  states.goal = GoalPlacement{GoalType::kCup, {6, 2}, fridge};
  HidingMetrics m = hiding_metrics(*scene, states, scene->start_pose().cell());
  CHECK(m.visible_from_pct == 0.0);
  CHECK(m.bfs_found);  // the seeker looks through openables
  CHECK(m.bfs_steps_pct > 0.0);
  CHECK(m.bfs_steps_pct <= 1.0);

  // A goal on the wall line is never visible: the search costs every cell.
  SceneDescription d = scene->description();
  d.terrain[static_cast<std::size_t>(2 * d.width + 7)] = Terrain::kWall;
  d.terrain[static_cast<std::size_t>(1 * d.width + 7)] = Terrain::kWall;
  d.terrain[static_cast<std::size_t>(3 * d.width + 7)] = Terrain::kWall;
  d.terrain[static_cast<std::size_t>(2 * d.width + 6)] = Terrain::kWall;
  d.objects.erase(d.objects.begin());  // fridge
  const Scene boxed = Scene::create(d);
  ObjectStates bs = ObjectStates::initial(boxed);
  bs.goal = GoalPlacement{GoalType::kCup, {8, 2}, std::nullopt};
  m = hiding_metrics(boxed, bs, boxed.start_pose().cell());
  CHECK_FALSE(m.bfs_found);
  CHECK(m.bfs_steps_pct == 1.0);
  CHECK(m.visible_from_pct == 0.0);

  // In the middle of an empty room most poses see the goal.
  const Scene open = build_scene(support::open_room_text(9, 9));
  ObjectStates os = ObjectStates::initial(open);
  os.goal = GoalPlacement{GoalType::kCup, {4, 4}, std::nullopt};
  oracle::World w{&open.description(), os.open, os.goal};
  const double v = hiding_metrics(open, os, {1, 1}).visible_from_pct;
  CHECK(v == doctest::Approx(oracle::visible_from(w)).epsilon(1e-15));
  CHECK(v > 0.3);
  CHECK_THROWS_AS(hiding_metrics(open, ObjectStates::initial(open), {1, 1}), PreconditionError);
}
