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

#include "gridcache/oracle.h"

#include <algorithm>
#include <deque>

#include "gridcache/error.h"

namespace gridcache {
namespace {

constexpr std::array<Cell, 4> kNeighbours = {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}};

bool goal_visible_from_cell(const Scene& scene, const ObjectStates& states, Cell from,
                            bool see_through) {
  for (int r = 0; r < 4; ++r) {
    for (bool standing : {false, true}) {
      const Pose p{from.x, from.z, static_cast<Rotation>(r), standing};
      if (object_visible(scene, states, p, kGoalObjectId, std::nullopt, see_through)) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<Cell> bfs_visit_order(const Scene& scene, Cell start) {
  std::vector<int> dist(scene.cell_count(), -1);
  std::vector<std::pair<int, Cell>> order;
  if (!scene.walkable(start)) return {};
  std::deque<Cell> frontier{start};
  dist[static_cast<std::size_t>(scene.index(start))] = 0;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    const int d = dist[static_cast<std::size_t>(scene.index(c))];
    order.push_back({d, c});
    for (const Cell& step : kNeighbours) {
      const Cell n = c + step;
      if (!scene.walkable(n)) continue;
      int& dn = dist[static_cast<std::size_t>(scene.index(n))];
      if (dn >= 0) continue;
      dn = d + 1;
      frontier.push_back(n);
    }
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.second.z != b.second.z) return a.second.z < b.second.z;
    return a.second.x < b.second.x;
  });
  std::vector<Cell> out;
  out.reserve(order.size());
  for (const auto& [d, c] : order) out.push_back(c);
  return out;
}

BfsResult bfs_seek(const Scene& scene, const GoalPlacement& goal, Cell seeker_start) {
  ObjectStates states = ObjectStates::initial(scene);
  states.goal = goal;
  const std::vector<Cell> order = bfs_visit_order(scene, seeker_start);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (goal_visible_from_cell(scene, states, order[k], true)) {
      return {true, static_cast<int>(k) + 1};
    }
  }
  return {false, static_cast<int>(order.size())};
}

double visible_from_fraction(const Scene& scene, const ObjectStates& states) {
  if (!states.goal) throw PreconditionError("visible_from_fraction: goal is not placed");
  const std::vector<Cell> cells = reachable_cells(scene);
  if (cells.empty()) return 0.0;
  if (goal_hidden_by_container(scene, states, false)) return 0.0;
  const Cell target = states.goal->cell;
  int count = 0;
  for (const Cell& c : cells) {
    for (bool standing : {false, true}) {
      if (!line_of_sight(scene, c, target, standing)) continue;
      for (int r = 0; r < 4; ++r) {
        if (in_view_region({c.x, c.z, static_cast<Rotation>(r), standing}, target)) ++count;
      }
    }
  }
  return static_cast<double>(count) / static_cast<double>(cells.size() * 8);
}

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kMedium: return "medium";
    case Difficulty::kHard: return "hard";
  }
  return "?";
}

std::optional<Difficulty> difficulty_from_string(std::string_view s) {
  for (Difficulty d : {Difficulty::kEasy, Difficulty::kMedium, Difficulty::kHard}) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

std::vector<HidingSpot> enumerate_spots(const Scene& scene, GoalType goal_type) {
  const std::vector<Cell> reachable = reachable_cells(scene);
  std::vector<char> near(scene.cell_count(), 0);
  for (const Cell& c : reachable) {
    near[static_cast<std::size_t>(scene.index(c))] = 1;
    for (const Cell& step : kNeighbours) {
      const Cell n = c + step;
      if (scene.in_bounds(n)) near[static_cast<std::size_t>(scene.index(n))] = 1;
    }
  }

  auto behind_anchor = [&](Cell c) {
    for (const Cell& step : kNeighbours) {
      const Cell n = c + step;
      if (!scene.in_bounds(n)) continue;
      for (std::size_t k : scene.objects_at(n)) {
        if (scene.objects()[k].slots.contains(Modality::kBehind)) return true;
      }
    }
    return false;
  };

  std::vector<HidingSpot> spots;
  ObjectStates states = ObjectStates::initial(scene);
  auto add = [&](Cell c, Modality m, std::optional<std::size_t> container) {
    HidingSpot spot;
    spot.scene_id = scene.id();
    spot.goal_type = goal_type;
    spot.cell = c;
    spot.modality = m;
    spot.container = container;
    states.goal = spot.placement();
    spot.visible_from = visible_from_fraction(scene, states);
    spots.push_back(std::move(spot));
  };

  for (int idx = 0; idx < static_cast<int>(scene.cell_count()); ++idx) {
    if (!near[static_cast<std::size_t>(idx)]) continue;
    const Cell c = scene.cell_at(idx);
    if (supports_resting(scene, c)) {
      bool on_object = false;
      for (std::size_t k : scene.objects_at(c)) {
        if (scene.objects()[k].kind != ObjectKind::kGoal) on_object = true;
      }
      add(c, !on_object && behind_anchor(c) ? Modality::kBehind : Modality::kOnTop, std::nullopt);
    }
    for (std::size_t k : scene.objects_at(c)) {
      const WorldObject& o = scene.objects()[k];
      if (o.slots.contains(Modality::kContainedIn) &&
          static_cast<int>(o.capacity) >= static_cast<int>(goal_size(goal_type))) {
        add(c, Modality::kContainedIn, k);
      }
    }
  }
  return spots;
}

double nearest_rank_percentile(std::vector<double> values, int percent) {
  if (values.empty()) throw PreconditionError("nearest_rank_percentile: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

LabeledSpots label_difficulty(std::vector<HidingSpot> spots, Rng& rng, std::size_t per_set) {
  if (spots.empty()) throw PreconditionError("label_difficulty: no spots");
  std::vector<double> v;
  v.reserve(spots.size());
  for (const HidingSpot& s : spots) v.push_back(s.visible_from);
  const double q5 = nearest_rank_percentile(v, 5);
  const double q20 = nearest_rank_percentile(v, 20);

  LabeledSpots out;
  std::vector<std::size_t> pools[3];
  for (std::size_t k = 0; k < spots.size(); ++k) {
    HidingSpot& s = spots[k];
    if (s.visible_from <= q5) {
      s.difficulty = Difficulty::kHard;
    } else if (s.visible_from <= 0.15 && s.visible_from <= q20) {
      s.difficulty = Difficulty::kMedium;
    } else {
      s.difficulty = Difficulty::kEasy;
    }
    pools[static_cast<int>(*s.difficulty)].push_back(k);
  }
  for (auto& pool : pools) {
    rng.shuffle(pool);
    if (pool.size() > per_set) pool.resize(per_set);
    std::sort(pool.begin(), pool.end());
  }
  out.spots = std::move(spots);
  out.easy = std::move(pools[0]);
  out.medium = std::move(pools[1]);
  out.hard = std::move(pools[2]);
  return out;
}

VisibilityField::VisibilityField(const Scene& scene, const ObjectStates& states)
    : scene_(&scene), states_(states) {
  if (!states_.goal) throw PreconditionError("VisibilityField: goal is not placed");
  if (const auto c = states_.goal->container;
      c && scene.objects()[*c].opaque_when_closed && !states_.is_open(*c)) {
    container_ = c;
    initially_open_ = false;
  }

  const std::size_t n = scene.cell_count() * 16;
  dist_.assign(n, kUnreachable);
  std::vector<std::vector<std::uint32_t>> preds(n);
  std::deque<std::size_t> frontier;

  for (int idx = 0; idx < static_cast<int>(scene.cell_count()); ++idx) {
    const Cell c = scene.cell_at(idx);
    if (!scene.walkable(c)) continue;
    for (int open = 0; open < 2; ++open) {
      if (!container_ && open == 0) continue;
      for (int r = 0; r < 4; ++r) {
        for (bool standing : {false, true}) {
          const State s{{c.x, c.z, static_cast<Rotation>(r), standing}, open == 1};
          const std::size_t si = index(s);
          if (goal_visible(s)) {
            dist_[si] = 0;
            frontier.push_back(si);
          }
          for (ActionKind kind : kNavActions) {
            if (auto t = successor(s, Action::simple(kind))) {
              preds[index(*t)].push_back(static_cast<std::uint32_t>(si));
            }
          }
          if (auto a = open_container_action(s.pose); a && !s.container_open) {
            preds[index({s.pose, true})].push_back(static_cast<std::uint32_t>(si));
          }
        }
      }
    }
  }
  while (!frontier.empty()) {
    const std::size_t t = frontier.front();
    frontier.pop_front();
    for (std::uint32_t s : preds[t]) {
      if (dist_[s] != kUnreachable) continue;
      dist_[s] = dist_[t] + 1;
      frontier.push_back(s);
    }
  }
}

std::size_t VisibilityField::index(const State& s) const {
  const std::size_t cell = static_cast<std::size_t>(scene_->index(s.pose.cell()));
  const std::size_t open = container_ ? (s.container_open ? 1 : 0) : 1;
  return ((cell * 4 + static_cast<std::size_t>(s.pose.rotation)) * 2 + (s.pose.standing ? 1 : 0)) *
             2 +
         open;
}

bool VisibilityField::goal_visible(const State& s) const {
  if (container_ && !s.container_open) return false;
  return cell_visible(*scene_, s.pose, states_.goal->cell, kInteractRange, false);
}

int VisibilityField::distance(const State& s) const {
  if (!scene_->walkable(s.pose.cell())) return kUnreachable;
  return dist_[index(s)];
}

std::optional<Action> VisibilityField::open_container_action(const Pose& pose) const {
  if (!container_) return std::nullopt;
  const Cell c = scene_->objects()[*container_].cell;
  const auto w = window_index(pose, c);
  if (!w) return std::nullopt;
  const Cell rel = c - pose.cell();
  if (rel.x * rel.x + rel.z * rel.z > kInteractRange * kInteractRange) return std::nullopt;
  if (!line_of_sight(*scene_, pose.cell(), c, pose.standing)) return std::nullopt;
  return Action::open_at(w->first, w->second);
}

std::optional<VisibilityField::State> VisibilityField::successor(const State& s,
                                                                 const Action& a) const {
  State t = s;
  auto move = [&](Cell d) -> std::optional<State> {
    const Cell n = s.pose.cell() + d;
    if (!scene_->walkable(n)) return std::nullopt;
    t.pose.x = n.x;
    t.pose.z = n.z;
    return t;
  };
  switch (a.kind) {
    case ActionKind::kMoveAhead: return move(forward_vector(s.pose.rotation));
    case ActionKind::kMoveLeft: return move(right_vector(s.pose.rotation) * -1);
    case ActionKind::kMoveRight: return move(right_vector(s.pose.rotation));
    case ActionKind::kRotateLeft: t.pose.rotation = rotate_left(s.pose.rotation); return t;
    case ActionKind::kRotateRight: t.pose.rotation = rotate_right(s.pose.rotation); return t;
    case ActionKind::kStand:
      if (s.pose.standing) return std::nullopt;
      t.pose.standing = true;
      return t;
    case ActionKind::kCrouch:
      if (!s.pose.standing) return std::nullopt;
      t.pose.standing = false;
      return t;
    case ActionKind::kOpenAt: {
      if (!container_ || s.container_open) return std::nullopt;
      const auto open = open_container_action(s.pose);
      if (!open || open->i != a.i || open->j != a.j) return std::nullopt;
      t.container_open = true;
      return t;
    }
    default:
      return std::nullopt;
  }
}

std::optional<Action> VisibilityField::best_action(const State& s) const {
  const int d = distance(s);
  if (d == 0 || d == kUnreachable) return std::nullopt;
  for (ActionKind kind : kNavActions) {
    const Action a = Action::simple(kind);
    if (auto t = successor(s, a); t && distance(*t) == d - 1) return a;
  }
  if (auto a = open_container_action(s.pose); a && !s.container_open) {
    if (distance({s.pose, true}) == d - 1) return a;
  }
  return std::nullopt;
}

std::optional<std::vector<Action>> VisibilityField::path(State s) const {
  if (distance(s) == kUnreachable) return std::nullopt;
  std::vector<Action> out;
  while (auto a = best_action(s)) {
    out.push_back(*a);
    s = *successor(s, *a);
  }
  return out;
}

std::optional<std::vector<Action>> shortest_path_to_visibility(const Scene& scene,
                                                               const ObjectStates& states,
                                                               const Pose& start) {
  const VisibilityField field(scene, states);
  return field.path(field.initial(start));
}

}  // namespace gridcache
