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

#ifndef GRIDCACHE_REWARDS_H_
#define GRIDCACHE_REWARDS_H_

// Per-step reward structures for the E&M, OH, OM and S episodes, the OH
// percentile reward, and the exploration and hiding metrics.

#include <optional>
#include <set>
#include <span>
#include <vector>

#include "gridcache/gamecore.h"
#include "gridcache/world.h"

namespace gridcache {

struct RewardConfig {
  double step = -0.01;
  double fail = -0.02;

  double em_extrap_coef = 0.2;
  double em_extrap_div = 3.0;
  double em_open_bonus = 0.4;
  double em_hide_coef = 0.2;
  double em_openat_floor = -0.001;

  double oh_ready_fail = -0.1;
  double oh_open_bonus = 0.2;
  double oh_repeat_place = -0.1;
  double oh_place_bonus = 0.02;
  double oh_place_p_floor = 0.0001;
  double oh_place_cap = 100.0;
  double oh_place_half = 0.5;
  double oh_place_div = 100.0;
  double oh_fail = -0.01;
  double oh_percentile_coef = 5.0;
  double oh_gamma = 0.8;

  double om_fail = -0.02;
  double om_open_bonus = 0.1;
  double om_offscreen = -1.0;
  double om_distance_base = 0.25;
  double om_modality_bonus = 1.0;
  double om_exact_bonus = 1.0;
  double om_timeout = -1.0;

  double s_claim_not_visible = -0.05;
  double s_fail = -0.02;
  double s_new_location = 0.01;
  double s_new_open = 0.06;
  double s_success = 1.0;

  int percentile_rollouts = 100;
};

// One action of a stage episode with the annotations the reward algorithms
// read. Sets are per episode.
struct TraceStep {
  Action action;
  bool success = false;
  Pose pose_after;
  int new_extrapolated = 0;   // |E_{t+1} \ E_t|
  bool new_opened = false;    // opened an object not opened before in the episode
  bool new_location = false;  // E&M: full location tuple; S: ignoring rotation
  double hide_value = 0.0;    // v_{t+1}
  ClaimFailure claim_failure = ClaimFailure::kNone;
  std::optional<PlacementResolution> placement;  // OM DropObject

  bool unseen() const { return success && (new_opened || new_location); }
};

struct ExplorationTrace {
  Stage stage = Stage::kEM;
  Pose start;
  double start_hide_value = 0.0;  // v_0; unseen_0 = 1
  std::vector<TraceStep> steps;
  bool timed_out = false;  // OM: the episode hit its step limit without a drop

  std::set<Pose> visited;       // V at episode end
  std::set<Pose> extrapolated;  // E at episode end, E ⊇ V
  std::set<std::size_t> opened;

  // v̄_t over s = 0..t.
  double mean_unseen_value(std::size_t t) const;
};

// Pose one step ahead and then one of stay/left/right, in bounds.
std::vector<Pose> extrapolate(const Scene& scene, const Pose& pose);

// Builds an episode trace from stage history records. hide_values, when
// given, holds v_1..v_N (one per record).
ExplorationTrace make_trace(const Scene& scene, Stage stage, const Pose& start,
                            std::span<const StepRecord> records,
                            std::span<const double> hide_values = {},
                            double start_hide_value = 0.0);

struct OmEpisode {
  Target target;
  ExplorationTrace trace;
};

struct StageTraces {
  ExplorationTrace em;
  ExplorationTrace oh;
  std::vector<OmEpisode> om;
  std::optional<ExplorationTrace> s;
};
// Splits a game's history into stage episodes.
StageTraces stage_traces(const GameState& game, std::span<const double> em_hide_values = {},
                         double em_start_value = 0.0);

double em_reward(const ExplorationTrace& trace, std::size_t t, const RewardConfig& cfg = {});
// p is the manipulation success probability of a successful PlaceAt; the
// percentile term is added at the last successful non-ReadyForSeeker action
// when some PlaceAt succeeded. Throws PreconditionError if p is outside [0,1].
double oh_reward(const ExplorationTrace& trace, std::size_t t, double p,
                 std::optional<double> percentile, const RewardConfig& cfg = {});
double om_reward(const ExplorationTrace& trace, std::size_t t, const Target& target,
                 const RewardConfig& cfg = {});
double s_reward(const ExplorationTrace& trace, std::size_t t, const RewardConfig& cfg = {});

// -1 + 2 * fraction of rollout lengths <= seeker_steps.
double oh_percentile(int seeker_steps, std::span<const int> rollout_lengths);

struct ExplorationMetrics {
  double coverage = 0.0;
  double coverage_plus = 0.0;
  double open_pct = 0.0;
  bool operator==(const ExplorationMetrics&) const = default;
};
ExplorationMetrics exploration_metrics(const ExplorationTrace& em, const Scene& scene);

struct HidingMetrics {
  double visible_from_pct = 0.0;
  double bfs_steps_pct = 0.0;
  bool bfs_found = false;
  int bfs_steps = 0;
  bool operator==(const HidingMetrics&) const = default;
};
// states carries the placed goal and the open flags at the end of hiding.
HidingMetrics hiding_metrics(const Scene& scene, const ObjectStates& states, Cell seeker_start);

}  // namespace gridcache

#endif  // GRIDCACHE_REWARDS_H_
