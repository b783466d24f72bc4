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

#ifndef GRIDCACHE_WORLD_H_
#define GRIDCACHE_WORLD_H_

// Grid world: scenes, poses, objects, line-of-sight visibility and free space.
//
// One cell is 0.25 m. Rotation 0 faces -z (north), 90 faces +x (east).
// The agent observes a 7x7 window of ground cells: window row i in 1..7 is
// the i-th row ahead of the agent, window column j in 1..7 runs left to right
// with j = 4 straight ahead.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gridcache {

inline constexpr int kWindowSize = 7;
inline constexpr int kWindowCenterColumn = 4;
inline constexpr int kWindowCells = kWindowSize * kWindowSize;
// 1.5 m interaction / claim range.
inline constexpr int kInteractRange = 6;
inline constexpr std::string_view kGoalObjectId = "goal";

struct Cell {
  int x = 0;
  int z = 0;

  auto operator<=>(const Cell&) const = default;
  Cell operator+(const Cell& o) const { return {x + o.x, z + o.z}; }
  Cell operator-(const Cell& o) const { return {x - o.x, z - o.z}; }
  Cell operator*(int k) const { return {x * k, z * k}; }
};

enum class Rotation : std::uint8_t { k0 = 0, k90 = 1, k180 = 2, k270 = 3 };

int degrees(Rotation r);
std::optional<Rotation> rotation_from_degrees(int degrees);
Rotation rotate_left(Rotation r);
Rotation rotate_right(Rotation r);
// Unit step the agent faces.
Cell forward_vector(Rotation r);
// Unit step to the agent's right.
Cell right_vector(Rotation r);

// Location tuple (x, z, rotation, standing).
struct Pose {
  int x = 0;
  int z = 0;
  Rotation rotation = Rotation::k0;
  bool standing = true;

  auto operator<=>(const Pose&) const = default;
  Cell cell() const { return {x, z}; }
};

// Projections removing one coordinate of a location tuple. Each returns the
// remaining three coordinates in their original order, rotation in degrees
// and standing as 0/1.
using Tuple3 = std::array<int, 3>;
Tuple3 drop_rotation(const Pose& p);  // (x, z, standing)
Tuple3 drop_stance(const Pose& p);    // (x, z, rotation)
Tuple3 drop_x(const Pose& p);         // (z, rotation, standing)
Tuple3 drop_z(const Pose& p);         // (x, rotation, standing)

struct PoseHash {
  std::size_t operator()(const Pose& p) const {
    return std::hash<std::uint64_t>()(
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.x)) << 32) ^
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.z)) << 3) ^
        (static_cast<std::uint64_t>(p.rotation) << 1) ^ (p.standing ? 1u : 0u));
  }
};

enum class Terrain : std::uint8_t { kFloor, kWall, kFurnitureLow, kFurnitureHigh };
enum class ObjectKind : std::uint8_t { kGoal, kReceptacle, kOccluder };
enum class GoalType : std::uint8_t { kBread, kCup, kKnife, kPlunger, kTomato };
enum class Modality : std::uint8_t { kOnTop = 0, kContainedIn = 1, kBehind = 2 };
enum class Height : std::uint8_t { kLow, kHigh };
// Object size rank; a goal object fits a container whose capacity is at
// least its size.
enum class SizeClass : std::uint8_t { kSmall = 1, kMedium = 2, kLarge = 3 };

inline constexpr std::array<GoalType, 5> kAllGoalTypes = {
    GoalType::kBread, GoalType::kCup, GoalType::kKnife, GoalType::kPlunger,
    GoalType::kTomato};

std::string_view to_string(Terrain t);
std::string_view to_string(ObjectKind k);
std::string_view to_string(GoalType g);
std::string_view to_string(Modality m);
std::string_view to_string(Height h);
std::string_view to_string(SizeClass s);
std::optional<GoalType> goal_type_from_string(std::string_view s);
std::optional<Modality> modality_from_string(std::string_view s);
SizeClass goal_size(GoalType g);

class ModalitySet {
 public:
  constexpr ModalitySet() = default;
  constexpr ModalitySet(std::initializer_list<Modality> ms) {
    for (Modality m : ms) insert(m);
  }
  constexpr void insert(Modality m) { bits_ |= bit(m); }
  constexpr bool contains(Modality m) const { return (bits_ & bit(m)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  bool operator==(const ModalitySet&) const = default;

 private:
  static constexpr std::uint8_t bit(Modality m) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(m));
  }
  std::uint8_t bits_ = 0;
};

struct WorldObject {
  std::string id;
  ObjectKind kind = ObjectKind::kReceptacle;
  std::optional<GoalType> goal_type;
  Cell cell;
  bool openable = false;
  bool opaque_when_closed = true;
  Height height = Height::kLow;
  ModalitySet slots;
  SizeClass capacity = SizeClass::kLarge;

  bool operator==(const WorldObject&) const = default;
};

// Plain, unvalidated scene content. Scene::create validates it.
struct SceneDescription {
  std::string id;
  int width = 0;
  int height = 0;
  std::vector<Terrain> terrain;  // row-major, index z * width + x
  std::vector<WorldObject> objects;
  Pose start;

  bool operator==(const SceneDescription&) const = default;
};

// Immutable validated scene.
class Scene {
 public:
  // Throws ValidationError naming the offending object or cell.
  static Scene create(SceneDescription description);

  const std::string& id() const { return desc_.id; }
  int width() const { return desc_.width; }
  int height() const { return desc_.height; }
  const Pose& start_pose() const { return desc_.start; }
  const std::vector<WorldObject>& objects() const { return desc_.objects; }
  const SceneDescription& description() const { return desc_; }
  int openable_count() const { return openable_count_; }

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.z >= 0 && c.x < desc_.width && c.z < desc_.height;
  }
  Terrain terrain(Cell c) const {
    return desc_.terrain[static_cast<std::size_t>(index(c))];
  }
  int index(Cell c) const { return c.z * desc_.width + c.x; }
  Cell cell_at(int index) const { return {index % desc_.width, index / desc_.width}; }
  std::size_t cell_count() const { return desc_.terrain.size(); }

  // Floor cell with no receptacle or occluder on it.
  bool walkable(Cell c) const;
  std::optional<std::size_t> object_index(std::string_view id) const;
  // Indices of scene objects occupying the cell.
  const std::vector<std::size_t>& objects_at(Cell c) const;

  // Sight blocking height of a cell: 0 none, 1 low, 2 high. With
  // see_through_openables, openable objects contribute nothing.
  int blocker(Cell c, bool see_through_openables) const {
    return see_through_openables ? blocker_see_through_[static_cast<std::size_t>(index(c))]
                                 : blocker_[static_cast<std::size_t>(index(c))];
  }

 private:
  explicit Scene(SceneDescription d) : desc_(std::move(d)) {}

  SceneDescription desc_;
  int openable_count_ = 0;
  std::vector<std::vector<std::size_t>> objects_by_cell_;
  std::vector<std::uint8_t> blocker_;
  std::vector<std::uint8_t> blocker_see_through_;
  std::vector<std::uint8_t> walkable_;
};

// Parses the textual scene format (documented in README) and validates.
// Throws ParseError (with line/column) or ValidationError.
Scene build_scene(std::string_view text);
SceneDescription parse_scene_description(std::string_view text);
// Canonical text; build_scene(serialize_scene(s)) reproduces s exactly.
std::string serialize_scene(const Scene& scene);

// Where the goal object rests when it is not held.
struct GoalPlacement {
  GoalType type = GoalType::kCup;
  Cell cell;
  std::optional<std::size_t> container;  // scene object index

  bool operator==(const GoalPlacement&) const = default;
};

// Mutable per-game overlay on an immutable scene.
struct ObjectStates {
  std::vector<bool> open;  // indexed like Scene::objects()
  std::optional<GoalPlacement> goal;

  static ObjectStates initial(const Scene& scene);
  bool is_open(std::size_t object) const { return open[object]; }
  bool operator==(const ObjectStates&) const = default;
};

// Every reachable location tuple: flood fill over walkable cells from the
// start pose, times 4 rotations and 2 stances. Sorted ascending.
std::vector<Pose> reachable_poses(const Scene& scene);
// proj_{-r}(proj_{-s}(reachable)), sorted by (x, z).
std::vector<Cell> reachable_cells(const Scene& scene);

// Cells touched by the closed-square supercover of the segment between the
// two cell centres, endpoints included, in traversal order.
std::vector<Cell> supercover_line(Cell from, Cell to);

// Unobstructed sight from one cell centre to another. Intermediate cells
// block when their height is high, or low while crouching.
bool line_of_sight(const Scene& scene, Cell from, Cell to, bool standing,
                   bool see_through_openables = false);

// World cell at window position (i, j) for the pose.
Cell window_cell(const Pose& pose, int i, int j);
// Inverse of window_cell, if the cell lies inside the window.
std::optional<std::pair<int, int>> window_index(const Pose& pose, Cell cell);
// Forward distance f >= 1 and |lateral| <= max(3, f): the 7x7 window united
// with the 90 degree cone beyond it.
bool in_view_region(const Pose& pose, Cell cell);

struct Occupant {
  std::string id;
  ObjectKind kind = ObjectKind::kReceptacle;
  std::optional<Modality> modality;  // set for the goal object only
  bool visible = false;
  bool open = false;
};

struct ViewCell {
  Cell world;
  bool in_bounds = false;
  bool visible = false;
  Terrain terrain = Terrain::kWall;
  std::vector<Occupant> occupants;
};

struct ViewWindow {
  Pose pose;
  std::array<ViewCell, kWindowCells> cells;

  // 1-based window coordinates.
  const ViewCell& at(int i, int j) const {
    return cells[static_cast<std::size_t>((i - 1) * kWindowSize + (j - 1))];
  }
  ViewCell& at(int i, int j) {
    return cells[static_cast<std::size_t>((i - 1) * kWindowSize + (j - 1))];
  }
};

ViewWindow view_window(const Scene& scene, const ObjectStates& states,
                       const Pose& pose);

// Whether the goal (when contained) is hidden by its closed opaque container.
bool goal_hidden_by_container(const Scene& scene, const ObjectStates& states,
                              bool see_through_openables);

// True iff the object's cell is in the view region, has line of sight from
// the pose, lies within max_range cells (Euclidean) when given, and (for the
// goal) is not shut inside an opaque container. "goal" names the placed goal
// object. Throws ValidationError for unknown ids.
bool object_visible(const Scene& scene, const ObjectStates& states,
                    const Pose& pose, std::string_view object_id,
                    std::optional<int> max_range,
                    bool see_through_openables = false);

// Same as object_visible but for an arbitrary cell, ignoring containment.
bool cell_visible(const Scene& scene, const Pose& pose, Cell cell,
                  std::optional<int> max_range, bool see_through_openables);

// Visible window cells an agent could occupy (walkable).
int free_space(const Scene& scene, const ObjectStates& states, const Pose& pose);

}  // namespace gridcache

#endif  // GRIDCACHE_WORLD_H_
