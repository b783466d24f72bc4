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

#ifndef GRIDCACHE_ORACLE_H_
#define GRIDCACHE_ORACLE_H_

// Ground-truth search: the teleporting BFS seeker, hiding-spot enumeration,
// percentile difficulty labels and shortest paths to visibility.

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gridcache/gamecore.h"
#include "gridcache/rng.h"
#include "gridcache/world.h"

namespace gridcache {

struct BfsResult {
  bool found = false;
  int steps = 0;
};

// Cells of the reachable region ordered by BFS distance from start, ties by
// (z, x).
std::vector<Cell> bfs_visit_order(const Scene& scene, Cell start);

// Visits cells nearest-first and checks all 8 poses at each with unbounded,
// see-through-openables visibility. steps counts visited cells up to and
// including the first sighting; an unfindable goal costs every cell.
BfsResult bfs_seek(const Scene& scene, const GoalPlacement& goal, Cell seeker_start);

// Fraction of reachable poses from which the placed goal is visible
// (unbounded range, openables as in states).
double visible_from_fraction(const Scene& scene, const ObjectStates& states);

enum class Difficulty : std::uint8_t { kEasy, kMedium, kHard };
std::string_view to_string(Difficulty d);
std::optional<Difficulty> difficulty_from_string(std::string_view s);

struct HidingSpot {
  std::string scene_id;
  GoalType goal_type = GoalType::kCup;
  Cell cell;
  Modality modality = Modality::kOnTop;
  std::optional<std::size_t> container;  // ContainedIn only
  double visible_from = 0.0;
  std::optional<Difficulty> difficulty;

  GoalPlacement placement() const { return {goal_type, cell, container}; }
  bool operator==(const HidingSpot&) const = default;
};

// Every physically admissible placement near the reachable region: one
// OnTop or Behind spot per resting cell (Behind when next to an object with a
// Behind slot) plus one ContainedIn spot per fitting container. visible_from
// is computed with every openable closed.
std::vector<HidingSpot> enumerate_spots(const Scene& scene, GoalType goal_type);

// Nearest-rank percentile: the value at 1-based rank ceil(percent * n / 100).
double nearest_rank_percentile(std::vector<double> values, int percent);

struct LabeledSpots {
  std::vector<HidingSpot> spots;  // difficulty set on every spot
  std::vector<std::size_t> easy;  // sampled indices into spots, ascending
  std::vector<std::size_t> medium;
  std::vector<std::size_t> hard;
};

// hard: v <= 5th percentile; medium: not hard, v <= 0.15 and v <= 20th
// percentile; easy otherwise. Samples min(per_set, available) of each.
LabeledSpots label_difficulty(std::vector<HidingSpot> spots, Rng& rng, std::size_t per_set = 20);

// Exact shortest action distances to "goal visible within range 6" over
// (pose, goal-container-open) states, by reverse BFS from the goal states.
class VisibilityField {
 public:
  static constexpr int kUnreachable = std::numeric_limits<int>::max();
  // Navigation actions considered, in tie-breaking order.
  static constexpr std::array<ActionKind, 7> kNavActions = {
      ActionKind::kMoveAhead,  ActionKind::kMoveLeft, ActionKind::kMoveRight,
      ActionKind::kRotateLeft, ActionKind::kRotateRight, ActionKind::kStand,
      ActionKind::kCrouch};

  VisibilityField(const Scene& scene, const ObjectStates& states);

  struct State {
    Pose pose;
    bool container_open = false;
    bool operator==(const State&) const = default;
  };

  int distance(const State& s) const;
  bool visible(const State& s) const { return distance(s) == 0; }
  // Successor under an action (OpenAt targets the goal container), or nullopt
  // if the action fails.
  std::optional<State> successor(const State& s, const Action& a) const;
  // The OpenAt action that opens the goal container from this pose, if any.
  std::optional<Action> open_container_action(const Pose& pose) const;
  // First optimal action, ties in kNavActions order with OpenAt last. Returns
  // nullopt when already visible or unreachable.
  std::optional<Action> best_action(const State& s) const;
  std::optional<std::vector<Action>> path(State s) const;
  State initial(const Pose& pose) const { return {pose, initially_open_}; }

 private:
  std::size_t index(const State& s) const;
  bool goal_visible(const State& s) const;

  const Scene* scene_;
  ObjectStates states_;
  std::optional<std::size_t> container_;
  bool initially_open_ = true;
  std::vector<int> dist_;
};

// Minimal legal action sequence (moves, rotations, stance, OpenAt) after
// which object_visible(goal, 6) holds; empty if already visible, nullopt if
// visibility cannot be reached.
std::optional<std::vector<Action>> shortest_path_to_visibility(const Scene& scene,
                                                               const ObjectStates& states,
                                                               const Pose& start);

}  // namespace gridcache

#endif  // GRIDCACHE_ORACLE_H_
