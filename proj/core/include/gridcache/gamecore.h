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

#ifndef GRIDCACHE_GAMECORE_H_
#define GRIDCACHE_GAMECORE_H_

// The five-stage game: exploration and mapping (EM), perspective simulation
// (PS), object hiding (OH), object manipulation (OM) and seeking (S).

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridcache/world.h"

namespace gridcache {

enum class Stage : std::uint8_t { kEM, kPS, kOH, kOM, kS };
inline constexpr int kStageCount = 5;
std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);

enum class ActionKind : std::uint8_t {
  kMoveAhead,
  kMoveLeft,
  kMoveRight,
  kRotateLeft,
  kRotateRight,
  kStand,
  kCrouch,
  kMoveHandAhead,
  kMoveHandLeft,
  kMoveHandRight,
  kMoveHandBack,
  kMoveHandUp,
  kMoveHandDown,
  kDropObject,
  kOpenAt,
  kCloseObjects,
  kPlaceAt,
  kReadyForSeeker,
  kClaimVisible,
  kChooseHidePose,
};
inline constexpr int kActionKindCount = 20;
std::string_view to_string(ActionKind k);

struct Action {
  ActionKind kind = ActionKind::kMoveAhead;
  // OpenAt|i,j and PlaceAt|m,i,j, window coordinates 1..7, m in {0,1,2}.
  int m = 0;
  int i = 0;
  int j = 0;
  // ChooseHidePose|dx,dz,rotation,standing.
  int dx = 0;
  int dz = 0;
  Rotation rotation = Rotation::k0;
  bool standing = true;

  static Action simple(ActionKind kind) { return Action{kind}; }
  static Action open_at(int i, int j);
  static Action place_at(Modality m, int i, int j);
  static Action choose_hide_pose(int dx, int dz, Rotation r, bool standing);

  bool operator==(const Action&) const = default;
};

// Wire notation, e.g. "MoveAhead", "OpenAt|3,4", "PlaceAt|1,3,4",
// "ChooseHidePose|-2,1,90,1".
std::string format_action(const Action& a);
// Throws ParseError (line 1, column of the offending character).
Action parse_action(std::string_view text);

// Action kinds available in a stage.
const std::vector<ActionKind>& legal_actions(Stage stage);
bool is_legal(Stage stage, ActionKind kind);

// fail, or (standing, modality, i, j): 1 + 2*3*7*7 = 295 outcomes.
struct HideOutcome {
  bool fail = true;
  bool standing = false;
  Modality modality = Modality::kOnTop;
  int i = 1;
  int j = 1;

  static HideOutcome failure() { return {}; }
  static HideOutcome placed(bool standing, Modality m, int i, int j) {
    return {false, standing, m, i, j};
  }
  // 0 is fail; placed outcomes follow in (standing, m, i, j) row-major order.
  int index() const;
  static HideOutcome from_index(int index);
  bool operator==(const HideOutcome&) const = default;
};
inline constexpr int kHideOutcomeCount = 295;
std::string format_outcome(const HideOutcome& o);

struct Target {
  Modality modality = Modality::kOnTop;
  int i = 1;
  int j = 1;
  bool operator==(const Target&) const = default;
};

// Where a dropped object came to rest relative to the OM pose.
struct Landing {
  int row = 0;  // window row; 0 means the agent's own cell (off-window)
  int column = kWindowCenterColumn;
  Cell cell;
  std::optional<std::size_t> container;
  bool on_window() const { return row >= 1; }
  bool operator==(const Landing&) const = default;
};

struct PlacementResolution {
  Landing landing;
  ModalitySet landed_modalities;
  bool success = false;
  HideOutcome matched_outcome;  // fail unless success
  bool operator==(const PlacementResolution&) const = default;
};

struct HandState {
  int i = 1;
  int j = kWindowCenterColumn;
  Height height = Height::kHigh;
  bool operator==(const HandState&) const = default;
};

// Final resting place of the goal object after OH.
struct HiddenRecord {
  Cell cell;
  Modality modality = Modality::kOnTop;
  std::optional<std::size_t> container;
  bool operator==(const HiddenRecord&) const = default;
};

enum class ClaimFailure : std::uint8_t { kNone, kNotVisible, kTooFar };

struct StepRecord {
  Stage stage = Stage::kEM;
  int stage_t = 0;  // stage clock before the action
  Action action;
  bool success = false;
  Pose pose_after;  // acting agent
  std::vector<std::size_t> opened;
  std::vector<std::size_t> closed;
  HandState hand_after;
  std::optional<PlacementResolution> placement;  // DropObject, PlaceAt, budget drop
  ClaimFailure claim_failure = ClaimFailure::kNone;
};

// Per-stage step limits; 0 disables a limit (used for human players).
struct GameLimits {
  int em = 200;
  int ps_tries = 10;
  int oh = 15;
  int om = 50;
  int s = 500;
  bool operator==(const GameLimits&) const = default;
};

struct GameState {
  std::shared_ptr<const Scene> scene;
  GoalType goal_type = GoalType::kCup;
  GameLimits limits;
  std::uint64_t rng_seed = 0;

  Stage stage = Stage::kEM;
  bool finished = false;
  // Stage clocks.
  int em_t = 0;
  int ps_t = 0;
  int oh_t = 0;
  int om_t = 0;
  int s_t = 0;

  Pose em_start;
  Pose hider_pose;
  Pose seeker_pose;
  std::optional<HandState> held;  // goal object in hand
  ObjectStates object_states;
  std::optional<HiddenRecord> hidden;

  // OH/OM bookkeeping.
  bool oh_placed = false;
  std::optional<HideOutcome> placed_outcome;
  std::optional<Target> om_target;
  std::optional<std::size_t> pending_place_record;
  bool seeker_found = false;

  std::vector<StepRecord> history;

  int t() const;
  const Pose& acting_pose() const { return stage == Stage::kS ? seeker_pose : hider_pose; }
};

struct StepResult {
  bool success = false;
  std::optional<Stage> stage_changed;
  bool game_over = false;
  std::optional<PlacementResolution> placement;
  ClaimFailure claim_failure = ClaimFailure::kNone;
};

// Starts a game in EM with the hider at the scene start holding the goal.
GameState start_game(std::shared_ptr<const Scene> scene, GoalType goal_type,
                     std::uint64_t seed, GameLimits limits = {});

// Starts directly in S against an existing hiding placement; the seeker
// begins at the scene start pose.
GameState start_seeking(std::shared_ptr<const Scene> scene, GoalType goal_type,
                        const HiddenRecord& hidden, const std::vector<bool>& open,
                        std::uint64_t seed, GameLimits limits = {});

// Applies one action in place. Failed actions change only the clock and the
// history. Throws IllegalActionError if the action is not in the stage's
// action set or the game is over.
StepResult apply_action(GameState& state, const Action& action);

// Records an action outside the stage's action set as a failed step: the
// stage clock advances (with its limit rules) and nothing else changes.
StepResult fail_action(GameState& state, const Action& action);

struct SteppedState {
  GameState state;
  StepResult result;
};
// Value-semantics wrapper around apply_action.
SteppedState step(const GameState& state, const Action& action);

// Whether a released object can rest on the cell: not a wall, and every
// object there offers an OnTop slot.
bool supports_resting(const Scene& scene, Cell c);

// Where an object released from the hand comes to rest.
Landing land_object(const Scene& scene, const ObjectStates& states, const Pose& pose,
                    const HandState& hand, GoalType goal_type);

// Classifies a drop against the PlaceAt target. Pure; the OM pose is the
// hider pose.
PlacementResolution resolve_placement(const Scene& scene, const ObjectStates& states,
                                      const Pose& pose, const Landing& landing,
                                      const Target& target);

struct GameOutcome {
  HideOutcome hide;
  bool seeking_done = false;
  bool found = false;
  int seeker_steps = 0;
};
// Throws PreconditionError before OH has completed.
GameOutcome outcome_of_game(const GameState& state);

// Human hider without an E&M budget: ends exploration and enters PS.
// Returns false outside E&M.
bool end_exploration(GameState& state);

// Human hider "pick it up again": clears a successful placement while in OH.
// Returns false when there is nothing to pick up.
bool restart_hiding(GameState& state);

// Hash of every mutable field, for determinism and corruption checks.
std::uint64_t state_hash(const GameState& state);

// Whether the hand may occupy the window cell at the given height.
bool hand_can_enter(const Scene& scene, const Pose& pose, int i, int j, Height height);

}  // namespace gridcache

#endif  // GRIDCACHE_GAMECORE_H_
