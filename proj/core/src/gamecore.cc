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

#include "gridcache/gamecore.h"

#include <algorithm>
#include <array>
#include <charconv>

#include "gridcache/error.h"

namespace gridcache {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kEM: return "EM";
    case Stage::kPS: return "PS";
    case Stage::kOH: return "OH";
    case Stage::kOM: return "OM";
    case Stage::kS: return "S";
  }
  return "?";
}

std::optional<Stage> stage_from_string(std::string_view s) {
  for (Stage st : {Stage::kEM, Stage::kPS, Stage::kOH, Stage::kOM, Stage::kS}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

namespace {

constexpr std::array<std::string_view, kActionKindCount> kActionNames = {
    "MoveAhead",     "MoveLeft",      "MoveRight",     "RotateLeft",     "RotateRight",
    "Stand",         "Crouch",        "MoveHandAhead", "MoveHandLeft",   "MoveHandRight",
    "MoveHandBack",  "MoveHandUp",    "MoveHandDown",  "DropObject",     "OpenAt",
    "CloseObjects",  "PlaceAt",       "ReadyForSeeker", "ClaimVisible",  "ChooseHidePose",
};

bool in_window(int i, int j) {
  return i >= 1 && i <= kWindowSize && j >= 1 && j <= kWindowSize;
}

}  // namespace

std::string_view to_string(ActionKind k) { return kActionNames[static_cast<std::size_t>(k)]; }

Action Action::open_at(int i, int j) {
  Action a{ActionKind::kOpenAt};
  a.i = i;
  a.j = j;
  return a;
}

Action Action::place_at(Modality m, int i, int j) {
  Action a{ActionKind::kPlaceAt};
  a.m = static_cast<int>(m);
  a.i = i;
  a.j = j;
  return a;
}

Action Action::choose_hide_pose(int dx, int dz, Rotation r, bool standing) {
  Action a{ActionKind::kChooseHidePose};
  a.dx = dx;
  a.dz = dz;
  a.rotation = r;
  a.standing = standing;
  return a;
}

std::string format_action(const Action& a) {
  std::string out(to_string(a.kind));
  switch (a.kind) {
    case ActionKind::kOpenAt:
      out += "|" + std::to_string(a.i) + "," + std::to_string(a.j);
      break;
    case ActionKind::kPlaceAt:
      out += "|" + std::to_string(a.m) + "," + std::to_string(a.i) + "," + std::to_string(a.j);
      break;
    case ActionKind::kChooseHidePose:
      out += "|" + std::to_string(a.dx) + "," + std::to_string(a.dz) + "," +
             std::to_string(degrees(a.rotation)) + "," + (a.standing ? "1" : "0");
      break;
    default:
      break;
  }
  return out;
}

Action parse_action(std::string_view text) {
  const std::size_t bar = text.find('|');
  const std::string_view name = text.substr(0, bar);
  std::optional<ActionKind> kind;
  for (std::size_t k = 0; k < kActionNames.size(); ++k) {
    if (kActionNames[k] == name) kind = static_cast<ActionKind>(k);
  }
  if (!kind) throw ParseError(1, 1, "unknown action '" + std::string(name) + "'");

  std::vector<int> args;
  if (bar != std::string_view::npos) {
    std::size_t pos = bar + 1;
    while (true) {
      const std::size_t comma = text.find(',', pos);
      const std::size_t end = comma == std::string_view::npos ? text.size() : comma;
      int value = 0;
      const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + end, value);
      if (ec != std::errc() || ptr != text.data() + end) {
        throw ParseError(1, pos + 1, "expected integer argument in '" + std::string(text) + "'");
      }
      args.push_back(value);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }

  std::size_t arity = 0;
  if (*kind == ActionKind::kOpenAt) arity = 2;
  if (*kind == ActionKind::kPlaceAt) arity = 3;
  if (*kind == ActionKind::kChooseHidePose) arity = 4;
  if (args.size() != arity) {
    throw ParseError(1, name.size() + 1,
                     std::string(name) + " takes " + std::to_string(arity) + " argument(s)");
  }

  Action a{*kind};
  switch (*kind) {
    case ActionKind::kOpenAt:
      a.i = args[0];
      a.j = args[1];
      if (!in_window(a.i, a.j)) throw ParseError(1, bar + 2, "window index out of range 1..7");
      break;
    case ActionKind::kPlaceAt:
      a.m = args[0];
      a.i = args[1];
      a.j = args[2];
      if (a.m < 0 || a.m > 2) throw ParseError(1, bar + 2, "modality must be 0, 1 or 2");
      if (!in_window(a.i, a.j)) throw ParseError(1, bar + 2, "window index out of range 1..7");
      break;
    case ActionKind::kChooseHidePose: {
      a.dx = args[0];
      a.dz = args[1];
      const auto r = rotation_from_degrees(args[2]);
      if (!r) throw ParseError(1, bar + 2, "rotation must be 0, 90, 180 or 270");
      a.rotation = *r;
      if (args[3] != 0 && args[3] != 1) throw ParseError(1, bar + 2, "standing must be 0 or 1");
      a.standing = args[3] == 1;
      break;
    }
    default:
      break;
  }
  return a;
}

const std::vector<ActionKind>& legal_actions(Stage stage) {
  using K = ActionKind;
  static const std::vector<K> em = {K::kMoveAhead, K::kMoveLeft,  K::kMoveRight,
                                    K::kRotateLeft, K::kRotateRight, K::kStand,
                                    K::kCrouch,    K::kOpenAt,    K::kCloseObjects};
  static const std::vector<K> ps = {K::kChooseHidePose};
  static const std::vector<K> oh = {K::kStand,   K::kCrouch,  K::kOpenAt,
                                    K::kCloseObjects, K::kPlaceAt, K::kReadyForSeeker};
  static const std::vector<K> om = {K::kMoveHandAhead, K::kMoveHandLeft, K::kMoveHandRight,
                                    K::kMoveHandBack,  K::kMoveHandUp,   K::kMoveHandDown,
                                    K::kDropObject,    K::kOpenAt};
  static const std::vector<K> s = [] {
    std::vector<K> v = em;
    v.push_back(K::kClaimVisible);
    return v;
  }();
  switch (stage) {
    case Stage::kEM: return em;
    case Stage::kPS: return ps;
    case Stage::kOH: return oh;
    case Stage::kOM: return om;
    case Stage::kS: return s;
  }
  return em;
}

bool is_legal(Stage stage, ActionKind kind) {
  const auto& v = legal_actions(stage);
  return std::find(v.begin(), v.end(), kind) != v.end();
}

int HideOutcome::index() const {
  if (fail) return 0;
  return 1 + (((standing ? 1 : 0) * 3 + static_cast<int>(modality)) * kWindowSize + (i - 1)) *
                 kWindowSize +
         (j - 1);
}

HideOutcome HideOutcome::from_index(int index) {
  if (index <= 0) return failure();
  int k = index - 1;
  const int j = k % kWindowSize + 1;
  k /= kWindowSize;
  const int i = k % kWindowSize + 1;
  k /= kWindowSize;
  const int m = k % 3;
  const int s = k / 3;
  return placed(s == 1, static_cast<Modality>(m), i, j);
}

std::string format_outcome(const HideOutcome& o) {
  if (o.fail) return "fail";
  return std::to_string(o.standing ? 1 : 0) + "," + std::to_string(static_cast<int>(o.modality)) +
         "," + std::to_string(o.i) + "," + std::to_string(o.j);
}

int GameState::t() const {
  switch (stage) {
    case Stage::kEM: return em_t;
    case Stage::kPS: return ps_t;
    case Stage::kOH: return oh_t;
    case Stage::kOM: return om_t;
    case Stage::kS: return s_t;
  }
  return 0;
}

namespace {

HandState default_hand(const Pose& pose) {
  return {1, kWindowCenterColumn, pose.standing ? Height::kHigh : Height::kLow};
}

bool limit_reached(int t, int limit) { return limit > 0 && t >= limit; }

std::optional<std::size_t> fitting_open_container(const Scene& scene, const ObjectStates& states,
                                                  Cell c, GoalType goal) {
  if (!scene.in_bounds(c)) return std::nullopt;
  for (std::size_t k : scene.objects_at(c)) {
    const WorldObject& o = scene.objects()[k];
    if (o.slots.contains(Modality::kContainedIn) && states.is_open(k) &&
        static_cast<int>(o.capacity) >= static_cast<int>(goal_size(goal))) {
      return k;
    }
  }
  return std::nullopt;
}

bool within_interact_range(Cell a, Cell b) {
  const Cell d = b - a;
  return d.x * d.x + d.z * d.z <= kInteractRange * kInteractRange;
}

void begin_seeking(GameState& s, StepResult& result) {
  s.stage = Stage::kS;
  s.s_t = 0;
  s.seeker_pose = s.em_start;
  s.held.reset();
  result.stage_changed = Stage::kS;
}

// Ends OH; without a successful placement the object is dropped from the
// hand's default position.
void finish_hiding(GameState& s, StepResult& result) {
  if (!s.oh_placed) {
    const Scene& scene = *s.scene;
    const Landing landing = land_object(scene, s.object_states, s.hider_pose,
                                        default_hand(s.hider_pose), s.goal_type);
    s.object_states.goal = GoalPlacement{s.goal_type, landing.cell, landing.container};
    Modality m = Modality::kOnTop;
    if (landing.container) {
      m = Modality::kContainedIn;
    } else if (landing.on_window() &&
               !line_of_sight(scene, s.hider_pose.cell(), landing.cell, s.hider_pose.standing)) {
      m = Modality::kBehind;
    }
    s.hidden = HiddenRecord{landing.cell, m, landing.container};
    s.placed_outcome = HideOutcome::failure();
  }
  begin_seeking(s, result);
}

void return_to_hiding(GameState& s, StepResult& result) {
  s.stage = Stage::kOH;
  s.om_target.reset();
  s.pending_place_record.reset();
  if (!s.oh_placed) s.held = default_hand(s.hider_pose);
  result.stage_changed = Stage::kOH;
  if (limit_reached(s.oh_t, s.limits.oh)) finish_hiding(s, result);
}

bool try_move(const Scene& scene, Pose& pose, Cell delta) {
  const Cell target = pose.cell() + delta;
  if (!scene.walkable(target)) return false;
  pose.x = target.x;
  pose.z = target.z;
  return true;
}

// Navigation, stance and object interaction shared by EM, OH, OM and S.
bool apply_common(GameState& s, Pose& pose, const Action& a, StepRecord& rec) {
  const Scene& scene = *s.scene;
  switch (a.kind) {
    case ActionKind::kMoveAhead: return try_move(scene, pose, forward_vector(pose.rotation));
    case ActionKind::kMoveLeft: return try_move(scene, pose, right_vector(pose.rotation) * -1);
    case ActionKind::kMoveRight: return try_move(scene, pose, right_vector(pose.rotation));
    case ActionKind::kRotateLeft: pose.rotation = rotate_left(pose.rotation); return true;
    case ActionKind::kRotateRight: pose.rotation = rotate_right(pose.rotation); return true;
    case ActionKind::kStand:
      if (pose.standing) return false;
      pose.standing = true;
      return true;
    case ActionKind::kCrouch:
      if (!pose.standing) return false;
      pose.standing = false;
      return true;
    case ActionKind::kOpenAt: {
      const Cell c = window_cell(pose, a.i, a.j);
      if (!scene.in_bounds(c) || !within_interact_range(pose.cell(), c)) return false;
      if (!line_of_sight(scene, pose.cell(), c, pose.standing)) return false;
      for (std::size_t k : scene.objects_at(c)) {
        if (scene.objects()[k].openable && !s.object_states.is_open(k)) {
          s.object_states.open[k] = true;
          rec.opened.push_back(k);
          return true;
        }
      }
      return false;
    }
    case ActionKind::kCloseObjects: {
      for (std::size_t k = 0; k < scene.objects().size(); ++k) {
        if (s.object_states.is_open(k) && within_interact_range(pose.cell(), scene.objects()[k].cell)) {
          s.object_states.open[k] = false;
          rec.closed.push_back(k);
        }
      }
      return !rec.closed.empty();
    }
    default:
      return false;
  }
}

bool move_hand(const GameState& s, HandState& hand, ActionKind kind) {
  const Scene& scene = *s.scene;
  HandState next = hand;
  switch (kind) {
    case ActionKind::kMoveHandAhead: ++next.i; break;
    case ActionKind::kMoveHandBack: --next.i; break;
    case ActionKind::kMoveHandLeft: --next.j; break;
    case ActionKind::kMoveHandRight: ++next.j; break;
    case ActionKind::kMoveHandUp:
      if (hand.height == Height::kHigh) return false;
      next.height = Height::kHigh;
      break;
    case ActionKind::kMoveHandDown:
      if (hand.height == Height::kLow) return false;
      next.height = Height::kLow;
      break;
    default:
      return false;
  }
  if (!hand_can_enter(scene, s.hider_pose, next.i, next.j, next.height)) return false;
  hand = next;
  return true;
}

}  // namespace

bool supports_resting(const Scene& scene, Cell c) {
  if (!scene.in_bounds(c) || scene.terrain(c) == Terrain::kWall) return false;
  for (std::size_t k : scene.objects_at(c)) {
    const WorldObject& o = scene.objects()[k];
    if (o.kind != ObjectKind::kGoal && !o.slots.contains(Modality::kOnTop)) return false;
  }
  return true;
}

bool hand_can_enter(const Scene& scene, const Pose& pose, int i, int j, Height height) {
  if (!in_window(i, j)) return false;
  const int lateral = j - kWindowCenterColumn;
  if (i * i + lateral * lateral > kInteractRange * kInteractRange) return false;
  const Cell c = window_cell(pose, i, j);
  if (!scene.in_bounds(c)) return false;
  const Terrain t = scene.terrain(c);
  if (t == Terrain::kWall) return false;
  if (t == Terrain::kFurnitureHigh && height == Height::kLow) return false;
  return true;
}

Landing land_object(const Scene& scene, const ObjectStates& states, const Pose& pose,
                    const HandState& hand, GoalType goal_type) {
  for (int row = hand.i; row >= 1; --row) {
    const Cell c = window_cell(pose, row, hand.j);
    if (!scene.in_bounds(c)) continue;
    if (auto container = fitting_open_container(scene, states, c, goal_type)) {
      return {row, hand.j, c, container};
    }
    if (supports_resting(scene, c)) return {row, hand.j, c, std::nullopt};
  }
  return {0, kWindowCenterColumn, pose.cell(), std::nullopt};
}

PlacementResolution resolve_placement(const Scene& scene, const ObjectStates& /*states*/,
                                      const Pose& pose, const Landing& landing,
                                      const Target& target) {
  PlacementResolution r;
  r.landing = landing;
  if (!landing.on_window()) return r;
  if (landing.container) r.landed_modalities.insert(Modality::kContainedIn);
  if (line_of_sight(scene, pose.cell(), landing.cell, pose.standing)) {
    r.landed_modalities.insert(Modality::kOnTop);
  } else {
    r.landed_modalities.insert(Modality::kBehind);
  }
  if (!r.landed_modalities.contains(target.modality)) return r;
  bool cell_ok = landing.row == target.i && landing.column == target.j;
  if (target.modality != Modality::kOnTop && landing.column == target.j &&
      (landing.row == target.i - 1 || landing.row == target.i + 1)) {
    cell_ok = true;
  }
  if (cell_ok) {
    r.success = true;
    r.matched_outcome = HideOutcome::placed(pose.standing, target.modality, target.i, target.j);
  }
  return r;
}

GameState start_game(std::shared_ptr<const Scene> scene, GoalType goal_type, std::uint64_t seed,
                     GameLimits limits) {
  if (!scene) throw PreconditionError("start_game: null scene");
  GameState s;
  s.goal_type = goal_type;
  s.limits = limits;
  s.rng_seed = seed;
  s.em_start = scene->start_pose();
  s.hider_pose = s.em_start;
  s.seeker_pose = s.em_start;
  s.held = default_hand(s.hider_pose);
  s.object_states = ObjectStates::initial(*scene);
  s.scene = std::move(scene);
  return s;
}

GameState start_seeking(std::shared_ptr<const Scene> scene, GoalType goal_type,
                        const HiddenRecord& hidden, const std::vector<bool>& open,
                        std::uint64_t seed, GameLimits limits) {
  GameState s = start_game(std::move(scene), goal_type, seed, limits);
  if (open.size() != s.object_states.open.size()) {
    throw PreconditionError("start_seeking: object state size mismatch");
  }
  s.object_states.open = open;
  s.object_states.goal = GoalPlacement{goal_type, hidden.cell, hidden.container};
  s.hidden = hidden;
  s.oh_placed = true;
  s.placed_outcome = HideOutcome::failure();
  s.stage = Stage::kS;
  s.held.reset();
  return s;
}

StepResult apply_action(GameState& s, const Action& a) {
  if (s.finished) throw IllegalActionError("game is over");
  if (!is_legal(s.stage, a.kind)) {
    throw IllegalActionError(std::string(to_string(a.kind)) + " is not available in stage " +
                             std::string(to_string(s.stage)));
  }
  const Scene& scene = *s.scene;
  StepResult result;
  StepRecord rec;
  rec.stage = s.stage;
  rec.stage_t = s.t();
  rec.action = a;

  switch (s.stage) {
    case Stage::kEM: {
      Pose pose = s.hider_pose;
      result.success = apply_common(s, pose, a, rec);
      if (result.success) s.hider_pose = pose;
      ++s.em_t;
      rec.success = result.success;
      rec.pose_after = s.hider_pose;
      if (s.held) rec.hand_after = *s.held;
      s.history.push_back(std::move(rec));
      if (limit_reached(s.em_t, s.limits.em)) {
        s.stage = Stage::kPS;
        result.stage_changed = Stage::kPS;
      }
      return result;
    }
    case Stage::kPS: {
      const Pose target{s.hider_pose.x + a.dx, s.hider_pose.z + a.dz, a.rotation, a.standing};
      const auto cells = reachable_cells(scene);
      result.success = std::binary_search(cells.begin(), cells.end(), target.cell());
      if (result.success) s.hider_pose = target;
      ++s.ps_t;
      rec.success = result.success;
      rec.pose_after = s.hider_pose;
      s.history.push_back(std::move(rec));
      if (result.success || limit_reached(s.ps_t, s.limits.ps_tries)) {
        s.stage = Stage::kOH;
        s.held = default_hand(s.hider_pose);
        result.stage_changed = Stage::kOH;
      }
      return result;
    }
    case Stage::kOH: {
      ++s.oh_t;
      if (a.kind == ActionKind::kPlaceAt) {
        rec.pose_after = s.hider_pose;
        if (s.oh_placed) {
          result.success = false;
          rec.success = false;
          s.history.push_back(std::move(rec));
        } else {
          // Success is settled when the OM sub-episode ends.
          s.history.push_back(std::move(rec));
          s.pending_place_record = s.history.size() - 1;
          s.om_target = Target{static_cast<Modality>(a.m), a.i, a.j};
          s.stage = Stage::kOM;
          s.om_t = 0;
          s.held = default_hand(s.hider_pose);
          result.success = true;
          result.stage_changed = Stage::kOM;
          return result;
        }
      } else if (a.kind == ActionKind::kReadyForSeeker) {
        result.success = s.oh_placed;
        rec.success = result.success;
        rec.pose_after = s.hider_pose;
        s.history.push_back(std::move(rec));
        if (result.success) {
          begin_seeking(s, result);
          return result;
        }
      } else {
        Pose pose = s.hider_pose;
        result.success = apply_common(s, pose, a, rec);
        if (result.success) {
          s.hider_pose = pose;
          if (s.held) s.held = default_hand(s.hider_pose);
        }
        rec.success = result.success;
        rec.pose_after = s.hider_pose;
        s.history.push_back(std::move(rec));
      }
      if (limit_reached(s.oh_t, s.limits.oh)) finish_hiding(s, result);
      return result;
    }
    case Stage::kOM: {
      ++s.om_t;
      HandState hand = s.held.value_or(default_hand(s.hider_pose));
      bool dropped = false;
      if (a.kind == ActionKind::kDropObject) {
        dropped = true;
        result.success = true;
        const Landing landing = land_object(scene, s.object_states, s.hider_pose, hand, s.goal_type);
        const PlacementResolution res =
            resolve_placement(scene, s.object_states, s.hider_pose, landing, *s.om_target);
        rec.placement = res;
        result.placement = res;
      } else if (a.kind == ActionKind::kOpenAt) {
        Pose pose = s.hider_pose;
        result.success = apply_common(s, pose, a, rec);
      } else {
        result.success = move_hand(s, hand, a.kind);
        if (result.success) s.held = hand;
      }
      rec.success = result.success;
      rec.pose_after = s.hider_pose;
      rec.hand_after = s.held.value_or(hand);
      s.history.push_back(rec);

      if (dropped || limit_reached(s.om_t, s.limits.om)) {
        StepRecord& place = s.history[*s.pending_place_record];
        if (dropped && rec.placement->success) {
          const PlacementResolution& res = *rec.placement;
          place.success = true;
          place.placement = res;
          s.oh_placed = true;
          s.placed_outcome = res.matched_outcome;
          s.held.reset();
          s.object_states.goal = GoalPlacement{s.goal_type, res.landing.cell, res.landing.container};
          s.hidden = HiddenRecord{res.landing.cell, s.om_target->modality, res.landing.container};
        } else {
          place.success = false;
          if (dropped) place.placement = rec.placement;
        }
        return_to_hiding(s, result);
      }
      return result;
    }
    case Stage::kS: {
      if (a.kind == ActionKind::kClaimVisible) {
        result.success =
            object_visible(scene, s.object_states, s.seeker_pose, kGoalObjectId, kInteractRange);
        if (!result.success) {
          const bool seen_far =
              object_visible(scene, s.object_states, s.seeker_pose, kGoalObjectId, std::nullopt);
          result.claim_failure = seen_far ? ClaimFailure::kTooFar : ClaimFailure::kNotVisible;
          rec.claim_failure = result.claim_failure;
        }
      } else {
        Pose pose = s.seeker_pose;
        result.success = apply_common(s, pose, a, rec);
        if (result.success) s.seeker_pose = pose;
      }
      ++s.s_t;
      rec.success = result.success;
      rec.pose_after = s.seeker_pose;
      s.history.push_back(std::move(rec));
      if (a.kind == ActionKind::kClaimVisible && result.success) {
        s.seeker_found = true;
        s.finished = true;
        result.game_over = true;
      } else if (limit_reached(s.s_t, s.limits.s)) {
        s.finished = true;
        result.game_over = true;
      }
      return result;
    }
  }
  return result;
}

StepResult fail_action(GameState& s, const Action& a) {
  if (s.finished) throw IllegalActionError("game is over");
  StepResult result;
  StepRecord rec;
  rec.stage = s.stage;
  rec.stage_t = s.t();
  rec.action = a;
  rec.success = false;
  rec.pose_after = s.acting_pose();
  if (s.held) rec.hand_after = *s.held;
  s.history.push_back(rec);
  switch (s.stage) {
    case Stage::kEM:
      if (limit_reached(++s.em_t, s.limits.em)) {
        s.stage = Stage::kPS;
        result.stage_changed = Stage::kPS;
      }
      break;
    case Stage::kPS:
      if (limit_reached(++s.ps_t, s.limits.ps_tries)) {
        s.stage = Stage::kOH;
        s.held = default_hand(s.hider_pose);
        result.stage_changed = Stage::kOH;
      }
      break;
    case Stage::kOH:
      if (limit_reached(++s.oh_t, s.limits.oh)) finish_hiding(s, result);
      break;
    case Stage::kOM:
      if (limit_reached(++s.om_t, s.limits.om)) {
        s.history[*s.pending_place_record].success = false;
        return_to_hiding(s, result);
      }
      break;
    case Stage::kS:
      if (limit_reached(++s.s_t, s.limits.s)) {
        s.finished = true;
        result.game_over = true;
      }
      break;
  }
  return result;
}

SteppedState step(const GameState& state, const Action& action) {
  SteppedState out{state, {}};
  out.result = apply_action(out.state, action);
  return out;
}

GameOutcome outcome_of_game(const GameState& s) {
  if (s.stage != Stage::kS) throw PreconditionError("outcome_of_game: hiding has not completed");
  GameOutcome o;
  o.hide = s.placed_outcome.value_or(HideOutcome::failure());
  o.seeking_done = s.finished;
  o.found = s.seeker_found;
  o.seeker_steps = s.s_t;
  return o;
}

bool end_exploration(GameState& state) {
  if (state.finished || state.stage != Stage::kEM) return false;
  state.stage = Stage::kPS;
  return true;
}

bool restart_hiding(GameState& s) {
  if (s.stage != Stage::kOH || !s.oh_placed) return false;
  s.oh_placed = false;
  s.placed_outcome.reset();
  s.hidden.reset();
  s.object_states.goal.reset();
  s.held = default_hand(s.hider_pose);
  return true;
}

namespace {

class Fnv {
 public:
  void add(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
      h_ ^= (v >> (8 * k)) & 0xFF;
      h_ *= 1099511628211ULL;
    }
  }
  void add(const Pose& p) {
    add(static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.x)));
    add(static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.z)));
    add(static_cast<std::uint64_t>(p.rotation));
    add(p.standing ? 1 : 0);
  }
  void add(const Cell& c) {
    add(static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)));
    add(static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.z)));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

}  // namespace

std::uint64_t state_hash(const GameState& s) {
  Fnv h;
  h.add(static_cast<std::uint64_t>(s.stage));
  h.add(s.finished);
  for (int t : {s.em_t, s.ps_t, s.oh_t, s.om_t, s.s_t}) h.add(static_cast<std::uint64_t>(t));
  h.add(s.hider_pose);
  h.add(s.seeker_pose);
  h.add(s.held.has_value());
  if (s.held) {
    h.add(static_cast<std::uint64_t>(s.held->i));
    h.add(static_cast<std::uint64_t>(s.held->j));
    h.add(static_cast<std::uint64_t>(s.held->height));
  }
  for (bool o : s.object_states.open) h.add(o ? 1 : 0);
  h.add(s.object_states.goal.has_value());
  if (s.object_states.goal) {
    h.add(s.object_states.goal->cell);
    h.add(s.object_states.goal->container.value_or(9999));
  }
  h.add(s.hidden.has_value());
  if (s.hidden) {
    h.add(s.hidden->cell);
    h.add(static_cast<std::uint64_t>(s.hidden->modality));
  }
  h.add(s.oh_placed);
  h.add(s.seeker_found);
  h.add(s.history.size());
  for (const StepRecord& r : s.history) {
    h.add(static_cast<std::uint64_t>(r.action.kind));
    h.add(static_cast<std::uint64_t>(r.action.m * 10000 + r.action.i * 100 + r.action.j));
    h.add(r.success);
    h.add(r.pose_after);
  }
  return h.value();
}

}  // namespace gridcache
