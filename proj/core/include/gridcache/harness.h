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

#ifndef GRIDCACHE_HARNESS_H_
#define GRIDCACHE_HARNESS_H_

// Match running, reports, evaluation statistics, the seriation dataset,
// file formats and the procedural scene generator.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridcache/agent.h"
#include "gridcache/gamecore.h"
#include "gridcache/oracle.h"
#include "gridcache/rewards.h"
#include "gridcache/rng.h"
#include "gridcache/world.h"

namespace gridcache {

// ---------------------------------------------------------------- policies

// Uniform over the stage's head action space; PS picks a uniform reachable
// pose.
class RandomPolicy : public Policy {
 public:
  std::string name() const override { return "random"; }
  Action act(const GameState& state, Rng& rng) override;
};

// Rotates in place through E&M, hides where it stands and signals ready at
// once, so the goal drops from the default hand at the start pose.
class DropAtStartHider : public Policy {
 public:
  std::string name() const override { return "scripted:drop"; }
  Action act(const GameState& state, Rng& rng) override;
};

// Knows the goal placement: claims when visible, otherwise takes the first
// shortest-path action (OpenAt on the goal container included). With
// epsilon > 0 a uniform navigation action replaces the greedy one.
class OracleSeeker : public Policy {
 public:
  explicit OracleSeeker(double epsilon = 0.0) : epsilon_(epsilon) {}
  std::string name() const override { return epsilon_ > 0.0 ? "egreedy" : "oracle"; }
  void begin(const GameState& state, Rng& rng) override;
  Action act(const GameState& state, Rng& rng) override;

 private:
  double epsilon_;
  std::optional<VisibilityField> field_;
};

// Searches without knowing the placement. Claims when the goal is visible
// within range, walks toward it when it is visible further away, opens
// closed openables in reach, and otherwise heads for the nearest pose that
// shows an unseen cell. With probability epsilon it takes a uniform
// navigation action instead of its greedy choice.
class ExploringSeeker : public Policy {
 public:
  explicit ExploringSeeker(double epsilon = 0.2) : epsilon_(epsilon) {}
  std::string name() const override { return "explorer"; }
  void begin(const GameState& state, Rng& rng) override;
  Action act(const GameState& state, Rng& rng) override;

 private:
  std::optional<Action> frontier_action(const Pose& from);

  double epsilon_;
  std::optional<VisibilityField> field_;
  std::map<Pose, std::vector<int>> view_cells_;  // per reachable pose, cell indices seen
  std::vector<bool> seen_;
  std::vector<bool> tried_open_;
  std::vector<std::pair<Pose, Action>> route_;  // (expected pose, action), next last
};

// Applies an action the way a player would: actions outside the stage's
// set become failed steps, and without an E&M budget a ChooseHidePose sent
// in E&M first ends exploration.
StepResult play_action(GameState& state, const Action& action);

// Named policy factory: random, scripted:drop, oracle, egreedy, explorer.
// Returns nullptr for an unknown name.
std::unique_ptr<Policy> make_policy(std::string_view name);

// ---------------------------------------------------------------- reports

struct ReportConfig {
  RewardConfig rewards;
  double om_success_p = 0.5;  // p in the PlaceAt reward
  int percentile_rollouts = 100;
};

struct ReportStep {
  Stage stage = Stage::kEM;
  std::string action;  // wire notation
  bool success = false;
  double reward = 0.0;
  bool operator==(const ReportStep&) const = default;
};

struct MatchReport {
  std::string scene_id;
  GoalType goal_type = GoalType::kCup;
  std::uint64_t seed = 0;
  std::string hider;
  std::string seeker;
  GameLimits limits;
  bool seek_only = false;  // started in S against a given placement
  std::optional<HiddenRecord> start_hidden;  // seek_only placement
  std::vector<bool> start_open;              // seek_only openness

  std::vector<ReportStep> steps;
  HideOutcome outcome;
  std::optional<HiddenRecord> hidden;
  bool found = false;
  int seeker_steps = 0;
  std::optional<double> percentile;
  std::optional<ExplorationMetrics> exploration;
  std::optional<HidingMetrics> hiding;
  std::array<double, kStageCount> returns{};

  bool operator==(const MatchReport&) const = default;
};

// Builds the report of a finished (or abandoned) game by replaying its
// history from a fresh start. Rollout randomness derives from the seed.
MatchReport report_from_game(const GameState& game, std::string_view hider, std::string_view seeker,
                             const ReportConfig& cfg = {});

// Plays a full game and reports it.
MatchReport run_match(std::shared_ptr<const Scene> scene, GoalType goal_type, Policy& hider,
                      Policy& seeker, std::uint64_t seed, const GameLimits& limits = {},
                      const ReportConfig& cfg = {});

// Applies a fixed action list (wire notation) to a new game and reports it.
// Actions outside the stage's set become failed steps; actions after the
// end are ignored.
MatchReport run_scripted(std::shared_ptr<const Scene> scene, GoalType goal_type,
                         std::span<const std::string> actions, std::uint64_t seed,
                         const GameLimits& limits = {}, const ReportConfig& cfg = {});

// Recomputes a report from its own action list.
MatchReport replay_report(std::shared_ptr<const Scene> scene, const MatchReport& report,
                          const ReportConfig& cfg = {});

std::string serialize_report(const MatchReport& report);
// Throws ParseError (line, column) or VersionError.
MatchReport parse_report(std::string_view text);

// ---------------------------------------------------------------- evaluation

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for k successes in n trials. n must be positive.
Interval wilson_interval(int successes, int trials, double z = 1.96);
// Student t interval for the mean; degenerate at n < 2.
Interval t_interval(std::span<const double> values, double confidence = 0.95);

struct SpotSet {
  std::string label;
  std::vector<HidingSpot> spots;
};

struct EvalRow {
  std::string label;
  int games = 0;
  int found = 0;
  double find_rate = 0.0;
  Interval find_ci;
  double mean_steps = 0.0;
  Interval steps_ci;
};

using SceneIndex = std::map<std::string, std::shared_ptr<const Scene>>;
using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

// Seeks every spot `trials` times with a fresh seeker; the seed of a game
// depends only on the spot and trial, so results ignore set ordering.
// Throws PreconditionError for zero trials, empty sets or unknown scenes.
std::vector<EvalRow> evaluate(const std::vector<SpotSet>& sets, const SceneIndex& scenes,
                              const PolicyFactory& seeker, int trials, std::uint64_t seed,
                              const GameLimits& limits = {});

// ---------------------------------------------------------------- seriation

struct SeriationExample {
  std::string scene_id;
  std::vector<Pose> poses;  // viewing sequence up to and including this view
  std::vector<int> counts;  // free space per pose
  bool label = false;       // counts[t] > counts[t - 1]
  bool operator==(const SeriationExample&) const = default;
};

// min(20, round(0.15 * n)) with halves rounded up.
int seriation_positions(int reachable_positions);

// Per scene: random distinct positions; from each a random start rotation
// and direction, then seven rotations so every orientation is seen twice.
// Examples come from the second viewing of each orientation.
std::vector<SeriationExample> seriation_dataset(const std::vector<std::shared_ptr<const Scene>>& scenes,
                                                Rng& rng);

// ---------------------------------------------------------------- files

std::string serialize_spots(const std::vector<HidingSpot>& spots);
// Throws ParseError (line, column) or VersionError.
std::vector<HidingSpot> parse_spots(std::string_view text);

// Reads a whole file; throws Error when it cannot be opened.
std::string read_file(const std::string& path);
// Writes through a temporary file and rename.
void write_file_atomic(const std::string& path, std::string_view content);

// ---------------------------------------------------------------- generator

struct GeneratorConfig {
  int min_size = 7;
  int max_size = 15;
  int min_receptacles = 2;
  int max_receptacles = 6;
  int min_occluders = 3;
  int max_occluders = 10;
};

// Walled rectangular room with furniture, receptacles and occluders placed
// so the free floor stays connected.
Scene generate_scene(const std::string& id, Rng& rng, const GeneratorConfig& cfg = {});

}  // namespace gridcache

#endif  // GRIDCACHE_HARNESS_H_
