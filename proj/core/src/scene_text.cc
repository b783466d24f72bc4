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

// Textual scene format.
//
//   cache-scene 1
//   id <scene id>
//   size <width> <height>
//   start <x> <z> <rotation degrees> <stand|crouch>
//   grid
//   <height rows of width glyphs: '.' floor, '#' wall, 'l' low, 'h' high>
//   object <id> <goal|receptacle|occluder> <x> <z> [key=value ...]
//
// Object keys: type, openable, opaque, height, slots, capacity. Blank lines
// and lines starting with ';' are ignored.

#include <charconv>
#include <sstream>

#include "gridcache/error.h"
#include "gridcache/world.h"

namespace gridcache {
namespace {

constexpr std::string_view kMagic = "cache-scene";
constexpr int kVersion = 1;

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

struct Line {
  std::size_t number;
  std::string_view text;
  std::vector<Token> tokens;
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && (line[k] == ' ' || line[k] == '\t' || line[k] == '\r')) ++k;
    if (k >= line.size()) break;
    const std::size_t start = k;
    while (k < line.size() && line[k] != ' ' && line[k] != '\t' && line[k] != '\r') ++k;
    out.push_back({line.substr(start, k - start), start + 1});
  }
  return out;
}

class Reader {
 public:
  explicit Reader(std::string_view text) {
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t end = text.find('\n', pos);
      const std::string_view raw =
          text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
      ++number;
      Line line{number, raw, tokenize(raw)};
      const bool skip = line.tokens.empty() || line.tokens.front().text.front() == ';';
      if (!skip) lines_.push_back(std::move(line));
      if (end == std::string_view::npos) break;
      pos = end + 1;
    }
    last_line_ = number;
  }

  bool done() const { return next_ >= lines_.size(); }

  const Line& next(std::string_view expected) {
    if (done()) {
      throw ParseError(last_line_, 0,
                       "unexpected end of input, expected '" + std::string(expected) + "'");
    }
    return lines_[next_++];
  }

  // Raw grid rows keep blank-free content; returns the row text.
  const Line& next_row() { return next("grid row"); }

 private:
  std::vector<Line> lines_;
  std::size_t next_ = 0;
  std::size_t last_line_ = 0;
};

int parse_int(const Line& line, std::size_t index, std::string_view what) {
  if (index >= line.tokens.size()) {
    throw ParseError(line.number, line.text.size() + 1, "missing " + std::string(what));
  }
  const Token& t = line.tokens[index];
  int value = 0;
  const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
  if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
    throw ParseError(line.number, t.column,
                     "expected integer " + std::string(what) + ", got '" + std::string(t.text) + "'");
  }
  return value;
}

void expect_keyword(const Line& line, std::string_view keyword, std::size_t arity) {
  if (line.tokens.front().text != keyword) {
    throw ParseError(line.number, line.tokens.front().column,
                     "expected '" + std::string(keyword) + "', got '" +
                         std::string(line.tokens.front().text) + "'");
  }
  if (line.tokens.size() != arity + 1) {
    const std::size_t col = line.tokens.size() > arity + 1 ? line.tokens[arity + 1].column
                                                          : line.text.size() + 1;
    throw ParseError(line.number, col,
                     "'" + std::string(keyword) + "' takes " + std::to_string(arity) +
                         " argument(s)");
  }
}

bool parse_bool(const Line& line, const Token& t, std::string_view value) {
  if (value == "yes" || value == "true") return true;
  if (value == "no" || value == "false") return false;
  throw ParseError(line.number, t.column, "expected yes/no, got '" + std::string(value) + "'");
}

WorldObject parse_object(const Line& line) {
  if (line.tokens.size() < 5) {
    throw ParseError(line.number, line.text.size() + 1,
                     "object needs: object <id> <kind> <x> <z> [key=value...]");
  }
  WorldObject o;
  o.id = std::string(line.tokens[1].text);
  const std::string_view kind = line.tokens[2].text;
  if (kind == "goal") {
    o.kind = ObjectKind::kGoal;
  } else if (kind == "receptacle") {
    o.kind = ObjectKind::kReceptacle;
  } else if (kind == "occluder") {
    o.kind = ObjectKind::kOccluder;
  } else {
    throw ParseError(line.number, line.tokens[2].column, "unknown object kind '" + std::string(kind) + "'");
  }
  o.cell = {parse_int(line, 3, "x"), parse_int(line, 4, "z")};
  for (std::size_t k = 5; k < line.tokens.size(); ++k) {
    const Token& t = line.tokens[k];
    const std::size_t eq = t.text.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line.number, t.column, "expected key=value, got '" + std::string(t.text) + "'");
    }
    const std::string_view key = t.text.substr(0, eq);
    const std::string_view value = t.text.substr(eq + 1);
    if (key == "type") {
      const auto g = goal_type_from_string(value);
      if (!g) throw ParseError(line.number, t.column, "unknown goal type '" + std::string(value) + "'");
      o.goal_type = *g;
    } else if (key == "openable") {
      o.openable = parse_bool(line, t, value);
    } else if (key == "opaque") {
      o.opaque_when_closed = parse_bool(line, t, value);
    } else if (key == "height") {
      if (value == "low") {
        o.height = Height::kLow;
      } else if (value == "high") {
        o.height = Height::kHigh;
      } else {
        throw ParseError(line.number, t.column, "height must be low or high");
      }
    } else if (key == "capacity") {
      if (value == "small") {
        o.capacity = SizeClass::kSmall;
      } else if (value == "medium") {
        o.capacity = SizeClass::kMedium;
      } else if (value == "large") {
        o.capacity = SizeClass::kLarge;
      } else {
        throw ParseError(line.number, t.column, "capacity must be small, medium or large");
      }
    } else if (key == "slots") {
      if (value == "-") continue;
      std::size_t pos = 0;
      while (pos <= value.size()) {
        const std::size_t comma = value.find(',', pos);
        const std::string_view name = value.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        const auto m = modality_from_string(name);
        if (!m) throw ParseError(line.number, t.column, "unknown slot '" + std::string(name) + "'");
        o.slots.insert(*m);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
      }
    } else {
      throw ParseError(line.number, t.column, "unknown key '" + std::string(key) + "'");
    }
  }
  return o;
}

}  // namespace

SceneDescription parse_scene_description(std::string_view text) {
  Reader reader(text);
  SceneDescription d;

  const Line& header = reader.next(kMagic);
  if (header.tokens.front().text != kMagic) {
    throw ParseError(header.number, 1, "missing '" + std::string(kMagic) + "' header");
  }
  if (header.tokens.size() != 2) throw ParseError(header.number, 0, "header needs a version");
  const int version = parse_int(header, 1, "version");
  if (version != kVersion) {
    throw VersionError("scene format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kVersion) + ")");
  }

  const Line& id = reader.next("id");
  expect_keyword(id, "id", 1);
  d.id = std::string(id.tokens[1].text);

  const Line& size = reader.next("size");
  expect_keyword(size, "size", 2);
  d.width = parse_int(size, 1, "width");
  d.height = parse_int(size, 2, "height");
  if (d.width <= 0 || d.height <= 0) throw ParseError(size.number, size.tokens[1].column, "size must be positive");

  const Line& start = reader.next("start");
  expect_keyword(start, "start", 4);
  d.start.x = parse_int(start, 1, "x");
  d.start.z = parse_int(start, 2, "z");
  const auto rot = rotation_from_degrees(parse_int(start, 3, "rotation"));
  if (!rot) throw ParseError(start.number, start.tokens[3].column, "rotation must be 0, 90, 180 or 270");
  d.start.rotation = *rot;
  const std::string_view stance = start.tokens[4].text;
  if (stance == "stand") {
    d.start.standing = true;
  } else if (stance == "crouch") {
    d.start.standing = false;
  } else {
    throw ParseError(start.number, start.tokens[4].column, "stance must be stand or crouch");
  }

  const Line& grid = reader.next("grid");
  expect_keyword(grid, "grid", 0);
  d.terrain.reserve(static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.height));
  for (int z = 0; z < d.height; ++z) {
    const Line& row = reader.next_row();
    if (row.tokens.size() != 1 || row.tokens.front().text.size() != static_cast<std::size_t>(d.width)) {
      throw ParseError(row.number, row.tokens.front().column,
                       "grid row must be exactly " + std::to_string(d.width) + " glyphs");
    }
    const Token& t = row.tokens.front();
    for (std::size_t x = 0; x < t.text.size(); ++x) {
      switch (t.text[x]) {
        case '.': d.terrain.push_back(Terrain::kFloor); break;
        case '#': d.terrain.push_back(Terrain::kWall); break;
        case 'l': d.terrain.push_back(Terrain::kFurnitureLow); break;
        case 'h': d.terrain.push_back(Terrain::kFurnitureHigh); break;
        default:
          throw ParseError(row.number, t.column + x, "unknown glyph '" + std::string(1, t.text[x]) + "'");
      }
    }
  }

  while (!reader.done()) {
    const Line& line = reader.next("object");
    if (line.tokens.front().text != "object") {
      throw ParseError(line.number, line.tokens.front().column,
                       "expected 'object', got '" + std::string(line.tokens.front().text) + "'");
    }
    d.objects.push_back(parse_object(line));
  }
  return d;
}

Scene build_scene(std::string_view text) { return Scene::create(parse_scene_description(text)); }

std::string serialize_scene(const Scene& scene) {
  const SceneDescription& d = scene.description();
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n';
  out << "id " << d.id << '\n';
  out << "size " << d.width << ' ' << d.height << '\n';
  out << "start " << d.start.x << ' ' << d.start.z << ' ' << degrees(d.start.rotation) << ' '
      << (d.start.standing ? "stand" : "crouch") << '\n';
  out << "grid\n";
  for (int z = 0; z < d.height; ++z) {
    for (int x = 0; x < d.width; ++x) {
      switch (d.terrain[static_cast<std::size_t>(z * d.width + x)]) {
        case Terrain::kFloor: out << '.'; break;
        case Terrain::kWall: out << '#'; break;
        case Terrain::kFurnitureLow: out << 'l'; break;
        case Terrain::kFurnitureHigh: out << 'h'; break;
      }
    }
    out << '\n';
  }
  for (const WorldObject& o : d.objects) {
    out << "object " << o.id << ' ' << to_string(o.kind) << ' ' << o.cell.x << ' ' << o.cell.z;
    if (o.goal_type) out << " type=" << to_string(*o.goal_type);
    out << " openable=" << (o.openable ? "yes" : "no") << " opaque="
        << (o.opaque_when_closed ? "yes" : "no") << " height=" << to_string(o.height) << " slots=";
    bool first = true;
    for (Modality m : {Modality::kOnTop, Modality::kContainedIn, Modality::kBehind}) {
      if (!o.slots.contains(m)) continue;
      out << (first ? "" : ",") << to_string(m);
      first = false;
    }
    if (first) out << '-';
    out << " capacity=" << to_string(o.capacity) << '\n';
  }
  return out.str();
}

}  // namespace gridcache
