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

#include "gridcache/world.h"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <unordered_set>

#include "gridcache/error.h"

namespace gridcache {

int degrees(Rotation r) { return static_cast<int>(r) * 90; }

std::optional<Rotation> rotation_from_degrees(int deg) {
  switch (deg) {
    case 0: return Rotation::k0;
    case 90: return Rotation::k90;
    case 180: return Rotation::k180;
    case 270: return Rotation::k270;
    default: return std::nullopt;
  }
}

Rotation rotate_left(Rotation r) {
  return static_cast<Rotation>((static_cast<int>(r) + 3) % 4);
}

Rotation rotate_right(Rotation r) {
  return static_cast<Rotation>((static_cast<int>(r) + 1) % 4);
}

Cell forward_vector(Rotation r) {
  switch (r) {
    case Rotation::k0: return {0, -1};
    case Rotation::k90: return {1, 0};
    case Rotation::k180: return {0, 1};
    case Rotation::k270: return {-1, 0};
  }
  return {0, -1};
}

Cell right_vector(Rotation r) {
  const Cell f = forward_vector(r);
  return {-f.z, f.x};
}

Tuple3 drop_rotation(const Pose& p) { return {p.x, p.z, p.standing ? 1 : 0}; }
Tuple3 drop_stance(const Pose& p) { return {p.x, p.z, degrees(p.rotation)}; }
Tuple3 drop_x(const Pose& p) {
  return {p.z, degrees(p.rotation), p.standing ? 1 : 0};
}
Tuple3 drop_z(const Pose& p) {
  return {p.x, degrees(p.rotation), p.standing ? 1 : 0};
}

std::string_view to_string(Terrain t) {
  switch (t) {
    case Terrain::kFloor: return "floor";
    case Terrain::kWall: return "wall";
    case Terrain::kFurnitureLow: return "furniture-low";
    case Terrain::kFurnitureHigh: return "furniture-high";
  }
  return "?";
}

std::string_view to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::kGoal: return "goal";
    case ObjectKind::kReceptacle: return "receptacle";
    case ObjectKind::kOccluder: return "occluder";
  }
  return "?";
}

std::string_view to_string(GoalType g) {
  switch (g) {
    case GoalType::kBread: return "bread";
    case GoalType::kCup: return "cup";
    case GoalType::kKnife: return "knife";
    case GoalType::kPlunger: return "plunger";
    case GoalType::kTomato: return "tomato";
  }
  return "?";
}

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::kOnTop: return "OnTop";
    case Modality::kContainedIn: return "ContainedIn";
    case Modality::kBehind: return "Behind";
  }
  return "?";
}

std::string_view to_string(Height h) { return h == Height::kLow ? "low" : "high"; }

std::string_view to_string(SizeClass s) {
  switch (s) {
    case SizeClass::kSmall: return "small";
    case SizeClass::kMedium: return "medium";
    case SizeClass::kLarge: return "large";
  }
  return "?";
}

std::optional<GoalType> goal_type_from_string(std::string_view s) {
  for (GoalType g : kAllGoalTypes) {
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

std::optional<Modality> modality_from_string(std::string_view s) {
  for (Modality m : {Modality::kOnTop, Modality::kContainedIn, Modality::kBehind}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

SizeClass goal_size(GoalType g) {
  switch (g) {
    case GoalType::kBread:
    case GoalType::kPlunger: return SizeClass::kLarge;
    case GoalType::kCup:
    case GoalType::kTomato: return SizeClass::kMedium;
    case GoalType::kKnife: return SizeClass::kSmall;
  }
  return SizeClass::kLarge;
}

namespace {

int terrain_blocker(Terrain t) {
  switch (t) {
    case Terrain::kFloor: return 0;
    case Terrain::kFurnitureLow: return 1;
    case Terrain::kWall:
    case Terrain::kFurnitureHigh: return 2;
  }
  return 2;
}

int object_blocker(const WorldObject& o) {
  if (o.kind == ObjectKind::kGoal) return 0;
  return o.height == Height::kHigh ? 2 : 1;
}

}  // namespace

Scene Scene::create(SceneDescription d) {
  if (d.width <= 0 || d.height <= 0) {
    throw ValidationError("scene '" + d.id + "': size must be positive");
  }
  if (d.terrain.size() != static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.height)) {
    throw ValidationError("scene '" + d.id + "': terrain does not match size");
  }
  Scene scene(std::move(d));
  const SceneDescription& desc = scene.desc_;
  const std::size_t n = desc.terrain.size();
  scene.objects_by_cell_.assign(n, {});
  scene.blocker_.assign(n, 0);
  scene.blocker_see_through_.assign(n, 0);
  scene.walkable_.assign(n, 0);

  std::unordered_set<std::string> ids;
  for (std::size_t k = 0; k < desc.objects.size(); ++k) {
    const WorldObject& o = desc.objects[k];
    const std::string where = "object '" + o.id + "'";
    if (o.id.empty()) throw ValidationError("object with empty id");
    if (o.id == kGoalObjectId) throw ValidationError(where + ": id is reserved");
    if (!ids.insert(o.id).second) throw ValidationError(where + ": duplicate id");
    if (!scene.in_bounds(o.cell)) {
      throw ValidationError(where + ": cell (" + std::to_string(o.cell.x) + "," +
                            std::to_string(o.cell.z) + ") out of bounds");
    }
    if ((o.kind == ObjectKind::kGoal) != o.goal_type.has_value()) {
      throw ValidationError(where + ": goal_type must be present exactly for goal objects");
    }
    if (o.slots.contains(Modality::kContainedIn) && !o.openable) {
      throw ValidationError(where + ": ContainedIn slot requires an openable object");
    }
    if (scene.terrain(o.cell) == Terrain::kWall) {
      throw ValidationError(where + ": placed inside a wall");
    }
    auto& here = scene.objects_by_cell_[static_cast<std::size_t>(scene.index(o.cell))];
    if (!here.empty()) {
      throw ValidationError(where + ": overlaps object '" + desc.objects[here.front()].id + "'");
    }
    here.push_back(k);
    if (o.openable) ++scene.openable_count_;
  }

  for (std::size_t c = 0; c < n; ++c) {
    int b = terrain_blocker(desc.terrain[c]);
    int b_through = b;
    bool blocked_by_object = false;
    for (std::size_t k : scene.objects_by_cell_[c]) {
      const WorldObject& o = desc.objects[k];
      b = std::max(b, object_blocker(o));
      if (!o.openable) b_through = std::max(b_through, object_blocker(o));
      if (o.kind != ObjectKind::kGoal) blocked_by_object = true;
    }
    scene.blocker_[c] = static_cast<std::uint8_t>(b);
    scene.blocker_see_through_[c] = static_cast<std::uint8_t>(b_through);
    scene.walkable_[c] = desc.terrain[c] == Terrain::kFloor && !blocked_by_object;
  }

  if (!scene.in_bounds(desc.start.cell()) || !scene.walkable(desc.start.cell())) {
    throw ValidationError("scene '" + desc.id + "': start pose is not on a free floor cell");
  }
  return scene;
}

bool Scene::walkable(Cell c) const {
  return in_bounds(c) && walkable_[static_cast<std::size_t>(index(c))] != 0;
}

std::optional<std::size_t> Scene::object_index(std::string_view id) const {
  for (std::size_t k = 0; k < desc_.objects.size(); ++k) {
    if (desc_.objects[k].id == id) return k;
  }
  return std::nullopt;
}

const std::vector<std::size_t>& Scene::objects_at(Cell c) const {
  return objects_by_cell_[static_cast<std::size_t>(index(c))];
}

ObjectStates ObjectStates::initial(const Scene& scene) {
  ObjectStates s;
  s.open.assign(scene.objects().size(), false);
  return s;
}

std::vector<Cell> reachable_cells(const Scene& scene) {
  std::vector<char> seen(scene.cell_count(), 0);
  std::deque<Cell> frontier;
  const Cell start = scene.start_pose().cell();
  frontier.push_back(start);
  seen[static_cast<std::size_t>(scene.index(start))] = 1;
  std::vector<Cell> out;
  static constexpr std::array<Cell, 4> kSteps = {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}};
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    out.push_back(c);
    for (const Cell& d : kSteps) {
      const Cell n = c + d;
      if (!scene.walkable(n)) continue;
      auto& flag = seen[static_cast<std::size_t>(scene.index(n))];
      if (flag) continue;
      flag = 1;
      frontier.push_back(n);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Pose> reachable_poses(const Scene& scene) {
  std::vector<Pose> out;
  for (const Cell& c : reachable_cells(scene)) {
    for (int r = 0; r < 4; ++r) {
      for (bool standing : {false, true}) {
        out.push_back({c.x, c.z, static_cast<Rotation>(r), standing});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Cell> supercover_line(Cell from, Cell to) {
  std::vector<Cell> out;
  int dx = to.x - from.x;
  int dz = to.z - from.z;
  const int xstep = dx < 0 ? -1 : 1;
  const int zstep = dz < 0 ? -1 : 1;
  dx = std::abs(dx);
  dz = std::abs(dz);
  const int ddx = 2 * dx;
  const int ddz = 2 * dz;
  int x = from.x;
  int z = from.z;
  out.push_back({x, z});
  if (ddx >= ddz) {
    int error = dx;
    int previous = error;
    for (int i = 0; i < dx; ++i) {
      x += xstep;
      error += ddz;
      if (error > ddx) {
        z += zstep;
        error -= ddx;
        if (error + previous < ddx) {
          out.push_back({x, z - zstep});
        } else if (error + previous > ddx) {
          out.push_back({x - xstep, z});
        } else {
          out.push_back({x, z - zstep});
          out.push_back({x - xstep, z});
        }
      }
      out.push_back({x, z});
      previous = error;
    }
  } else {
    int error = dz;
    int previous = error;
    for (int i = 0; i < dz; ++i) {
      z += zstep;
      error += ddx;
      if (error > ddz) {
        x += xstep;
        error -= ddz;
        if (error + previous < ddz) {
          out.push_back({x - xstep, z});
        } else if (error + previous > ddz) {
          out.push_back({x, z - zstep});
        } else {
          out.push_back({x - xstep, z});
          out.push_back({x, z - zstep});
        }
      }
      out.push_back({x, z});
      previous = error;
    }
  }
  return out;
}

bool line_of_sight(const Scene& scene, Cell from, Cell to, bool standing,
                   bool see_through_openables) {
  if (from == to) return true;
  const int threshold = standing ? 2 : 1;
  const std::vector<Cell> line = supercover_line(from, to);
  for (std::size_t k = 1; k + 1 < line.size(); ++k) {
    const Cell c = line[k];
    if (!scene.in_bounds(c)) return false;
    if (scene.blocker(c, see_through_openables) >= threshold) return false;
  }
  return true;
}

Cell window_cell(const Pose& pose, int i, int j) {
  const Cell f = forward_vector(pose.rotation);
  const Cell r = right_vector(pose.rotation);
  return pose.cell() + f * i + r * (j - kWindowCenterColumn);
}

std::optional<std::pair<int, int>> window_index(const Pose& pose, Cell cell) {
  const Cell rel = cell - pose.cell();
  const Cell f = forward_vector(pose.rotation);
  const Cell r = right_vector(pose.rotation);
  const int ahead = rel.x * f.x + rel.z * f.z;
  const int lateral = rel.x * r.x + rel.z * r.z;
  const int j = lateral + kWindowCenterColumn;
  if (ahead < 1 || ahead > kWindowSize || j < 1 || j > kWindowSize) return std::nullopt;
  return std::make_pair(ahead, j);
}

bool in_view_region(const Pose& pose, Cell cell) {
  const Cell rel = cell - pose.cell();
  const Cell f = forward_vector(pose.rotation);
  const Cell r = right_vector(pose.rotation);
  const int ahead = rel.x * f.x + rel.z * f.z;
  const int lateral = std::abs(rel.x * r.x + rel.z * r.z);
  return ahead >= 1 && lateral <= std::max(kWindowCenterColumn - 1, ahead);
}

bool goal_hidden_by_container(const Scene& scene, const ObjectStates& states,
                              bool see_through_openables) {
  if (!states.goal || !states.goal->container) return false;
  if (see_through_openables) return false;
  const std::size_t c = *states.goal->container;
  return !states.is_open(c) && scene.objects()[c].opaque_when_closed;
}

ViewWindow view_window(const Scene& scene, const ObjectStates& states, const Pose& pose) {
  ViewWindow w;
  w.pose = pose;
  const bool goal_hidden = goal_hidden_by_container(scene, states, false);
  for (int i = 1; i <= kWindowSize; ++i) {
    for (int j = 1; j <= kWindowSize; ++j) {
      ViewCell& vc = w.at(i, j);
      vc.world = window_cell(pose, i, j);
      vc.in_bounds = scene.in_bounds(vc.world);
      if (!vc.in_bounds) continue;
      vc.terrain = scene.terrain(vc.world);
      vc.visible = line_of_sight(scene, pose.cell(), vc.world, pose.standing);
      for (std::size_t k : scene.objects_at(vc.world)) {
        const WorldObject& o = scene.objects()[k];
        vc.occupants.push_back({o.id, o.kind, std::nullopt, vc.visible, states.is_open(k)});
      }
      if (states.goal && states.goal->cell == vc.world) {
        const bool contained = states.goal->container.has_value();
        vc.occupants.push_back({std::string(kGoalObjectId), ObjectKind::kGoal,
                                contained ? Modality::kContainedIn : Modality::kOnTop,
                                vc.visible && !goal_hidden, false});
      }
    }
  }
  return w;
}

bool cell_visible(const Scene& scene, const Pose& pose, Cell cell,
                  std::optional<int> max_range, bool see_through_openables) {
  if (!scene.in_bounds(cell) || !in_view_region(pose, cell)) return false;
  if (max_range) {
    const Cell rel = cell - pose.cell();
    if (rel.x * rel.x + rel.z * rel.z > *max_range * *max_range) return false;
  }
  return line_of_sight(scene, pose.cell(), cell, pose.standing, see_through_openables);
}

bool object_visible(const Scene& scene, const ObjectStates& states, const Pose& pose,
                    std::string_view object_id, std::optional<int> max_range,
                    bool see_through_openables) {
  if (object_id == kGoalObjectId) {
    if (!states.goal) return false;
    if (goal_hidden_by_container(scene, states, see_through_openables)) return false;
    return cell_visible(scene, pose, states.goal->cell, max_range, see_through_openables);
  }
  const auto k = scene.object_index(object_id);
  if (!k) throw ValidationError("unknown object '" + std::string(object_id) + "'");
  return cell_visible(scene, pose, scene.objects()[*k].cell, max_range, see_through_openables);
}

int free_space(const Scene& scene, const ObjectStates& /*states*/, const Pose& pose) {
  int count = 0;
  for (int i = 1; i <= kWindowSize; ++i) {
    for (int j = 1; j <= kWindowSize; ++j) {
      const Cell c = window_cell(pose, i, j);
      if (!scene.walkable(c)) continue;
      if (line_of_sight(scene, pose.cell(), c, pose.standing)) ++count;
    }
  }
  return count;
}

}  // namespace gridcache
