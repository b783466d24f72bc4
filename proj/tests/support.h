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

#ifndef GRIDCACHE_TESTS_SUPPORT_H_
#define GRIDCACHE_TESTS_SUPPORT_H_

#include <memory>
#include <string>
#include <vector>

#include "gridcache/harness.h"
#include "gridcache/world.h"

namespace support {

inline std::string fixture_path(const std::string& name) {
  return std::string(GRIDCACHE_FIXTURES) + "/" + name;
}

inline std::shared_ptr<const gridcache::Scene> room9() {
  static const auto scene = std::make_shared<const gridcache::Scene>(
      gridcache::build_scene(gridcache::read_file(fixture_path("room9.scene"))));
  return scene;
}

// Seeded generated scenes no larger than max_size on a side.
inline std::vector<std::shared_ptr<const gridcache::Scene>> generated(int count, std::uint64_t seed,
                                                                      int max_size = 10) {
  gridcache::Rng rng(seed);
  gridcache::GeneratorConfig cfg;
  cfg.max_size = max_size;
  std::vector<std::shared_ptr<const gridcache::Scene>> out;
  for (int k = 0; k < count; ++k) {
    out.push_back(std::make_shared<const gridcache::Scene>(
        gridcache::generate_scene("gen" + std::to_string(k), rng, cfg)));
  }
  return out;
}

// Open room of the given size with border walls and the start in a corner.
inline std::string open_room_text(int w, int h, const std::string& extra = "") {
  std::string s = "cache-scene 1\nid open\nsize " + std::to_string(w) + " " + std::to_string(h) +
                  "\nstart 1 1 180 stand\ngrid\n";
  for (int z = 0; z < h; ++z) {
    for (int x = 0; x < w; ++x) s += (x == 0 || z == 0 || x == w - 1 || z == h - 1) ? '#' : '.';
    s += '\n';
  }
  return s + extra;
}

}  // namespace support

#endif  // GRIDCACHE_TESTS_SUPPORT_H_
