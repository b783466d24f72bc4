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

#include <deque>
#include <map>
#include <set>

#include "doctest.h"
#include "gridcache/error.h"
#include "gridcache/oracle.h"
#include "oracles.h"
#include "support.h"

using namespace gridcache;

namespace {

// Forward breadth-first search over (pose, container open) driven by the
// game engine itself, with visibility decided by the reference oracle.
std::optional<int> engine_distance(std::shared_ptr<const Scene> scene, const HidingSpot& spot,
                                   const Pose& start) {
  GameState base = start_seeking(scene, spot.goal_type, {spot.cell, spot.modality, spot.container},
                                 std::vector<bool>(scene->objects().size(), false), 1, GameLimits{0, 0, 0, 0, 0});
  using Key = std::pair<Pose, bool>;
  auto visible = [&](const Key& k) {
    std::vector<bool> open(scene->objects().size(), false);
    if (spot.container) open[*spot.container] = k.second;
    oracle::World w{&scene->description(), open, spot.placement()};
    return oracle::goal_visible(w, k.first, 6, false);
  };
  std::vector<Action> actions;
  for (ActionKind k : VisibilityField::kNavActions) actions.push_back(Action::simple(k));
  for (int i = 1; i <= 7; ++i) {
    for (int j = 1; j <= 7; ++j) actions.push_back(Action::open_at(i, j));
  }
  std::map<Key, int> dist;
  std::deque<Key> q;
  dist[{start, false}] = 0;
  q.push_back({start, false});
  while (!q.empty()) {
    const Key k = q.front();
    q.pop_front();
    if (visible(k)) return dist[k];
    for (const Action& a : actions) {
      GameState g = base;
      g.seeker_pose = k.first;
      if (spot.container) g.object_states.open[*spot.container] = k.second;
      if (!apply_action(g, a).success) continue;
      const Key n{g.seeker_pose, spot.container ? bool(g.object_states.open[*spot.container]) : false};
      if (dist.count(n)) continue;
      dist[n] = dist[k] + 1;
      q.push_back(n);
    }
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("bfs visit order and bfs_seek match the reference") {
  for (const auto& scene : support::generated(10, 77)) {
    const SceneDescription& d = scene->description();
    const Cell start = scene->start_pose().cell();
    std::vector<std::tuple<int, int, int>> want;
    for (const auto& [c, k] : oracle::distances(d, start)) want.emplace_back(k, c.z, c.x);
    std::sort(want.begin(), want.end());
    const auto got = bfs_visit_order(*scene, start);
    REQUIRE(got.size() == want.size());
    for (std::size_t n = 0; n < got.size(); ++n) {
      CHECK(got[n] == Cell{std::get<2>(want[n]), std::get<1>(want[n])});
    }
    for (const HidingSpot& spot : enumerate_spots(*scene, GoalType::kCup)) {
      const BfsResult r = bfs_seek(*scene, spot.placement(), start);
      const oracle::Seek o = oracle::bfs_seek(d, spot.placement(), start);
      CHECK(r.found == o.found);
      CHECK(r.steps == o.steps);
    }
  }
}

TEST_CASE("visible-from fractions match the reference") {
  for (const auto& scene : support::generated(4, 5)) {
    for (const HidingSpot& spot : enumerate_spots(*scene, GoalType::kTomato)) {
      oracle::World w{&scene->description(), std::vector<bool>(scene->objects().size(), false),
                      spot.placement()};
      CHECK(spot.visible_from == oracle::visible_from(w));
      CHECK(spot.visible_from >= 0.0);
      CHECK(spot.visible_from <= 1.0);
    }
  }
}

TEST_CASE("spot enumeration on the fixture") {
  const auto scene = support::room9();
  const auto spots = enumerate_spots(*scene, GoalType::kKnife);
  std::set<std::pair<Cell, Modality>> keys;
  int contained = 0;
  for (const HidingSpot& s : spots) {
    CHECK(keys.insert({s.cell, s.modality}).second);
    CHECK(s.scene_id == "room9");
    CHECK_FALSE(s.difficulty.has_value());
    if (s.modality == Modality::kContainedIn) {
      ++contained;
      REQUIRE(s.container.has_value());
      CHECK(scene->objects()[*s.container].cell == s.cell);
      CHECK(s.visible_from == 0.0);  // closed opaque containers
    } else {
      CHECK_FALSE(s.container.has_value());
    }
  }
  CHECK(contained == 2);  // fridge and drawer both fit a knife
  const auto cups = enumerate_spots(*scene, GoalType::kCup);
  int cup_contained = 0;
  for (const HidingSpot& s : cups) cup_contained += s.modality == Modality::kContainedIn;
  CHECK(cup_contained == 1);
}

TEST_CASE("nearest rank percentile") {
  CHECK(nearest_rank_percentile({15, 20, 35, 40, 50}, 30) == 20);
  CHECK(nearest_rank_percentile({15, 20, 35, 40, 50}, 40) == 20);
  CHECK(nearest_rank_percentile({15, 20, 35, 40, 50}, 50) == 35);
  CHECK(nearest_rank_percentile({15, 20, 35, 40, 50}, 100) == 50);
  CHECK(nearest_rank_percentile({3, 1, 2}, 0) == 1);
  CHECK_THROWS_AS(nearest_rank_percentile({}, 5), PreconditionError);
}

TEST_CASE("difficulty labels match the reference on ladders") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<HidingSpot> spots(100);
    std::vector<double> v;
    for (std::size_t k = 0; k < spots.size(); ++k) {
      // Coarse values produce ties at the cut points.
      spots[k].visible_from = static_cast<double>(rng.below(trial % 2 ? 40 : 1000)) / (trial % 2 ? 40.0 : 1000.0);
      spots[k].cell = {static_cast<int>(k), 0};
      v.push_back(spots[k].visible_from);
    }
    const auto want = oracle::labels(v);
    Rng pick(trial);
    const LabeledSpots got = label_difficulty(spots, pick, 20);
    for (std::size_t k = 0; k < spots.size(); ++k) {
      CHECK(static_cast<int>(*got.spots[k].difficulty) == static_cast<int>(want[k]));
    }
    for (const auto* set : {&got.easy, &got.medium, &got.hard}) {
      CHECK(set->size() <= 20);
      CHECK(std::is_sorted(set->begin(), set->end()));
    }
    for (std::size_t k : got.hard) CHECK(got.spots[k].difficulty == Difficulty::kHard);
    for (std::size_t k : got.medium) CHECK(got.spots[k].difficulty == Difficulty::kMedium);
  }
  Rng rng2(1);
  CHECK_THROWS_AS(label_difficulty({}, rng2), PreconditionError);
}

TEST_CASE("shortest path to visibility is optimal under the game rules") {
  const auto scene = support::room9();
  const auto spots = enumerate_spots(*scene, GoalType::kKnife);
  Rng rng(2);
  const auto poses = reachable_poses(*scene);
  for (std::size_t n = 0; n < spots.size(); n += 3) {
    const HidingSpot& spot = spots[n];
    ObjectStates states = ObjectStates::initial(*scene);
    states.goal = spot.placement();
    const VisibilityField field(*scene, states);
    for (int trial = 0; trial < 4; ++trial) {
      const Pose start = poses[rng.below(poses.size())];
      const auto want = engine_distance(scene, spot, start);
      const auto path = shortest_path_to_visibility(*scene, states, start);
      CAPTURE(n);
      REQUIRE(path.has_value() == want.has_value());
      if (!path) continue;
      CHECK(static_cast<int>(path->size()) == *want);
      CHECK(field.distance(field.initial(start)) == *want);
      // Replaying the path in the engine ends with a successful claim.
      GameState g = start_seeking(scene, spot.goal_type, {spot.cell, spot.modality, spot.container},
                                  std::vector<bool>(scene->objects().size(), false), 1);
      g.seeker_pose = start;
      for (const Action& a : *path) REQUIRE(apply_action(g, a).success);
      CHECK(apply_action(g, Action::simple(ActionKind::kClaimVisible)).success);
    }
  }
}
