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

#include <algorithm>
#include <set>

#include "doctest.h"
#include "gridcache/error.h"
#include "gridcache/world.h"
#include "oracles.h"
#include "support.h"

using namespace gridcache;

TEST_CASE("rotations and unit vectors") {
  for (int deg : {0, 90, 180, 270}) {
    const Rotation r = *rotation_from_degrees(deg);
    CHECK(degrees(r) == deg);
    CHECK(forward_vector(r) == oracle::facing(deg));
    CHECK(right_vector(r) == oracle::right_hand(deg));
    CHECK(rotate_right(rotate_left(r)) == r);
    CHECK(degrees(rotate_right(r)) == (deg + 90) % 360);
  }
  CHECK_FALSE(rotation_from_degrees(45).has_value());
  CHECK(forward_vector(Rotation::k0) == Cell{0, -1});
  CHECK(forward_vector(Rotation::k90) == Cell{1, 0});
}

TEST_CASE("pose projections keep coordinate order") {
  const Pose p{3, 5, Rotation::k270, false};
  CHECK(drop_rotation(p) == Tuple3{3, 5, 0});
  CHECK(drop_stance(p) == Tuple3{3, 5, 270});
  CHECK(drop_x(p) == Tuple3{5, 270, 0});
  CHECK(drop_z(p) == Tuple3{3, 270, 0});
}

TEST_CASE("supercover matches exact segment and square intersection") {
  Rng rng(11);
  for (int n = 0; n < 2000; ++n) {
    const Cell a{static_cast<int>(rng.below(21)) - 10, static_cast<int>(rng.below(21)) - 10};
    const Cell b{static_cast<int>(rng.below(21)) - 10, static_cast<int>(rng.below(21)) - 10};
    const auto line = supercover_line(a, b);
    REQUIRE(!line.empty());
    CHECK(line.front() == a);
    CHECK(line.back() == b);
    const std::set<Cell> got(line.begin(), line.end());
    CHECK(got.size() == line.size());
    CHECK(got == oracle::touched_cells(a, b));
  }
}

TEST_CASE("a diagonal through a corner touches both side cells") {
  const auto line = supercover_line({0, 0}, {2, 2});
  const std::set<Cell> got(line.begin(), line.end());
  CHECK(got.count({1, 0}) == 1);
  CHECK(got.count({0, 1}) == 1);
  CHECK(got.size() == 7);
}

TEST_CASE("line of sight matches the oracle on every cell pair") {
  auto scenes = support::generated(6, 3);
  scenes.push_back(support::room9());
  for (const auto& scene : scenes) {
    const SceneDescription& d = scene->description();
    for (std::size_t a = 0; a < scene->cell_count(); ++a) {
      for (std::size_t b = 0; b < scene->cell_count(); b += 3) {
        const Cell ca = scene->cell_at(static_cast<int>(a));
        const Cell cb = scene->cell_at(static_cast<int>(b));
        for (bool standing : {true, false}) {
          for (bool through : {true, false}) {
            REQUIRE(line_of_sight(*scene, ca, cb, standing, through) ==
                    oracle::sight(d, ca, cb, standing, through));
          }
        }
      }
    }
  }
}

TEST_CASE("low furniture blocks only a crouched eye") {
  const Scene s = build_scene(support::open_room_text(7, 3) + "");
  SceneDescription d = s.description();
  d.terrain[static_cast<std::size_t>(1 * 7 + 3)] = Terrain::kFurnitureLow;
  const Scene low = Scene::create(d);
  CHECK(line_of_sight(low, {1, 1}, {5, 1}, true));
  CHECK_FALSE(line_of_sight(low, {1, 1}, {5, 1}, false));
  d.terrain[static_cast<std::size_t>(1 * 7 + 3)] = Terrain::kFurnitureHigh;
  const Scene high = Scene::create(d);
  CHECK_FALSE(line_of_sight(high, {1, 1}, {5, 1}, true));
}

TEST_CASE("view region and window geometry match the oracle") {
  for (int deg : {0, 90, 180, 270}) {
    for (bool standing : {true, false}) {
      const Pose p{0, 0, *rotation_from_degrees(deg), standing};
      for (int x = -12; x <= 12; ++x) {
        for (int z = -12; z <= 12; ++z) {
          CHECK(in_view_region(p, {x, z}) == oracle::in_view(p, {x, z}));
        }
      }
      for (int i = 1; i <= kWindowSize; ++i) {
        for (int j = 1; j <= kWindowSize; ++j) {
          const Cell c = window_cell(p, i, j);
          CHECK(c == oracle::window_cell(p, i, j));
          CHECK(in_view_region(p, c));
          const auto back = window_index(p, c);
          REQUIRE(back.has_value());
          CHECK(*back == std::pair{i, j});
        }
      }
      CHECK_FALSE(window_index(p, p.cell()).has_value());
    }
  }
  // Straight ahead column, two rows out, facing east.
  CHECK(window_cell(Pose{2, 2, Rotation::k90, true}, 2, 4) == Cell{4, 2});
  CHECK(window_cell(Pose{2, 2, Rotation::k0, true}, 1, 1) == Cell{-1, 1});
}

TEST_CASE("object visibility on the fixture") {
  const auto scene = support::room9();
  const SceneDescription& d = scene->description();
  ObjectStates states = ObjectStates::initial(*scene);
  const std::size_t fridge = *scene->object_index("fridge");
  states.goal = GoalPlacement{GoalType::kCup, scene->objects()[fridge].cell, fridge};
  oracle::World w{&d, states.open, states.goal};
  for (const Pose& p : reachable_poses(*scene)) {
    for (std::optional<int> range : {std::optional<int>{}, std::optional<int>{6}}) {
      for (bool through : {true, false}) {
        REQUIRE(object_visible(*scene, states, p, kGoalObjectId, range, through) ==
                oracle::goal_visible(w, p, range, through));
      }
    }
    CHECK_FALSE(object_visible(*scene, states, p, kGoalObjectId, std::nullopt, false));
  }
  states.open[fridge] = true;
  w.open = states.open;
  int seen = 0;
  for (const Pose& p : reachable_poses(*scene)) {
    const bool v = object_visible(*scene, states, p, kGoalObjectId, std::nullopt, false);
    CHECK(v == oracle::goal_visible(w, p, std::nullopt, false));
    seen += v;
  }
  CHECK(seen > 0);
  CHECK_THROWS_AS(object_visible(*scene, states, scene->start_pose(), "nope", std::nullopt), ValidationError);
}

TEST_CASE("reachable poses are every reachable cell times eight") {
  for (const auto& scene : support::generated(8, 21)) {
    const auto cells = reachable_cells(*scene);
    const auto poses = reachable_poses(*scene);
    CHECK(poses.size() == 8 * cells.size());
    CHECK(std::is_sorted(poses.begin(), poses.end()));
    CHECK(cells == oracle::reachable(scene->description()));
  }
}

TEST_CASE("free space matches the oracle") {
  const auto scene = support::room9();
  const ObjectStates states = ObjectStates::initial(*scene);
  for (const Pose& p : reachable_poses(*scene)) {
    CHECK(free_space(*scene, states, p) == oracle::free_space(scene->description(), p));
  }
}

TEST_CASE("view window reports terrain, occupants and visibility") {
  const auto scene = support::room9();
  ObjectStates states = ObjectStates::initial(*scene);
  const Pose p{2, 2, Rotation::k180, true};
  const ViewWindow w = view_window(*scene, states, p);
  for (int i = 1; i <= kWindowSize; ++i) {
    for (int j = 1; j <= kWindowSize; ++j) {
      const ViewCell& c = w.at(i, j);
      CHECK(c.world == oracle::window_cell(p, i, j));
      CHECK(c.in_bounds == oracle::inside(scene->description(), c.world));
      if (c.in_bounds) {
        CHECK(c.visible == oracle::sight(scene->description(), p.cell(), c.world, true, false));
      }
    }
  }
  // The shelf stands two rows ahead of the start.
  const ViewCell& shelf = w.at(2, 4);
  REQUIRE(shelf.occupants.size() == 1);
  CHECK(shelf.occupants[0].id == "shelf");
}

TEST_CASE("scene text round trip and errors") {
  const auto scene = support::room9();
  const std::string text = serialize_scene(*scene);
  const Scene again = build_scene(text);
  CHECK(again.description() == scene->description());
  CHECK(serialize_scene(again) == text);

  CHECK_THROWS_AS(build_scene("cache-scene 2\n"), VersionError);
  try {
    build_scene(support::open_room_text(4, 4) + "object box crate 1 1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 10);
    CHECK(e.column() == 12);
  }
  try {
    std::string bad = support::open_room_text(4, 4);
    bad[bad.find("##\n#.") + 4] = 'q';
    build_scene(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
    CHECK(e.column() == 2);
  }
  CHECK_THROWS_AS(build_scene(support::open_room_text(4, 4) + "object box receptacle 9 9\n"), ValidationError);
  CHECK_THROWS_AS(build_scene(support::open_room_text(4, 4) + "object a receptacle 1 2\nobject a receptacle 2 2\n"),
                  ValidationError);
}
