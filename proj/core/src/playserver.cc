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

#include "gridcache/playserver.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>

#include "httplib.h"
#include "json.hpp"

#include "gridcache/error.h"

namespace gridcache {

using json = nlohmann::ordered_json;

std::string_view to_string(Role r) { return r == Role::kHider ? "hider" : "seeker"; }

std::optional<Role> role_from_string(std::string_view s) {
  if (s == "hider") return Role::kHider;
  if (s == "seeker") return Role::kSeeker;
  return std::nullopt;
}

Clock steady_clock() {
  return [] {
    const auto now = std::chrono::steady_clock::now().time_since_epoch();
    return std::chrono::duration<double>(now).count();
  };
}

// ---------------------------------------------------------------- records

namespace {

constexpr std::string_view kTrialFormat = "cache-trial";
constexpr int kTrialVersion = 1;
constexpr int kWireVersion = 1;

json spot_json(const HidingSpot& s) {
  return json{{"scene", s.scene_id},
              {"goal", std::string(to_string(s.goal_type))},
              {"x", s.cell.x},
              {"z", s.cell.z},
              {"modality", std::string(to_string(s.modality))},
              {"container", s.container ? json(*s.container) : json(nullptr)},
              {"visible_from", s.visible_from},
              {"difficulty", s.difficulty ? json(std::string(to_string(*s.difficulty))) : json(nullptr)}};
}

HidingSpot spot_from(const json& j) {
  HidingSpot s;
  s.scene_id = j.at("scene").get<std::string>();
  const auto g = goal_type_from_string(j.at("goal").get<std::string>());
  const auto m = modality_from_string(j.at("modality").get<std::string>());
  if (!g || !m) throw std::invalid_argument("bad spot");
  s.goal_type = *g;
  s.modality = *m;
  s.cell = {j.at("x").get<int>(), j.at("z").get<int>()};
  if (!j.at("container").is_null()) s.container = j.at("container").get<std::size_t>();
  s.visible_from = j.at("visible_from").get<double>();
  if (!j.at("difficulty").is_null()) {
    const auto d = difficulty_from_string(j.at("difficulty").get<std::string>());
    if (!d) throw std::invalid_argument("bad difficulty");
    s.difficulty = *d;
  }
  return s;
}

}  // namespace

std::string serialize_trial(const TrialRecord& r) {
  json j;
  j["format"] = kTrialFormat;
  j["version"] = kTrialVersion;
  j["session"] = r.session;
  j["role"] = std::string(to_string(r.role));
  j["opponent"] = r.opponent;
  j["scene"] = r.scene_id;
  j["spot"] = r.spot ? spot_json(*r.spot) : json(nullptr);
  j["actions"] = r.actions;
  j["started"] = r.started;
  j["ended"] = r.ended;
  j["complete"] = r.complete;
  j["gave_up"] = r.gave_up;
  j["report"] = json::parse(serialize_report(r.report));
  return j.dump() + "\n";
}

TrialRecord parse_trial(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(1, e.byte, "malformed trial record");
  }
  try {
    if (!j.is_object() || j.value("format", std::string()) != kTrialFormat) {
      throw ParseError(1, 1, "missing 'cache-trial' format tag");
    }
    const int version = j.at("version").get<int>();
    if (version != kTrialVersion) {
      throw VersionError("trial format version " + std::to_string(version) + " is not supported");
    }
    TrialRecord r;
    r.session = j.at("session").get<std::string>();
    const auto role = role_from_string(j.at("role").get<std::string>());
    if (!role) throw std::invalid_argument("bad role");
    r.role = *role;
    r.opponent = j.at("opponent").get<std::string>();
    r.scene_id = j.at("scene").get<std::string>();
    if (!j.at("spot").is_null()) r.spot = spot_from(j.at("spot"));
    r.actions = j.at("actions").get<int>();
    r.started = j.at("started").get<double>();
    r.ended = j.at("ended").get<double>();
    r.complete = j.at("complete").get<bool>();
    r.gave_up = j.at("gave_up").get<bool>();
    r.report = parse_report(j.at("report").dump());
    return r;
  } catch (const json::exception& e) {
    throw ParseError(1, 1, std::string("invalid trial record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(1, 1, std::string("invalid trial record: ") + e.what());
  }
}

// ---------------------------------------------------------------- service

struct PlayService::Session {
  std::string id;
  Role role = Role::kHider;
  std::string opponent;
  bool familiarize = false;
  GameState game;
  double started = 0.0;
  int actions = 0;
  std::optional<HidingSpot> spot;
  MetricMap map;
  std::unique_ptr<Policy> agent;
  Rng rng{0};
  bool ended = false;
  std::mutex mu;
};

namespace {

std::string message(std::string_view type, const std::string& session, json body) {
  json j;
  j["type"] = type;
  if (!session.empty()) j["session"] = session;
  j["body"] = std::move(body);
  return j.dump();
}

std::string error_message(const std::string& session, std::string_view code, const std::string& text,
                          json extra = json::object()) {
  json body = {{"code", code}, {"message", text}};
  for (auto it = extra.begin(); it != extra.end(); ++it) body[it.key()] = it.value();
  return message("error", session, std::move(body));
}

// Human players have no step budgets; agent seekers keep theirs.
constexpr GameLimits kHumanHider{0, 0, 0, 0, 500};
constexpr GameLimits kHumanSeeker{200, 10, 15, 50, 0};

bool hider_stage(Stage s) { return s != Stage::kS; }

}  // namespace

PlayService::PlayService(SceneIndex scenes, ServiceConfig config, Clock clock)
    : scenes_(std::move(scenes)), config_(std::move(config)), clock_(std::move(clock)) {}

PlayService::~PlayService() = default;

std::size_t PlayService::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::shared_ptr<PlayService::Session> PlayService::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> PlayService::handle(std::string_view text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error& e) {
    return {error_message("", "malformed", e.what())};
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    return {error_message("", "malformed", "message must be an object with a string 'type'")};
  }
  const std::string type = msg["type"].get<std::string>();
  const json body = msg.value("body", json::object());
  if (type == "hello") {
    if (body.is_object() && body.contains("role")) return create(body.dump());
    json scenes = json::array();
    for (const auto& [id, scene] : scenes_) scenes.push_back(id);
    return {message("hello", "",
                    {{"version", kWireVersion},
                     {"scenes", scenes},
                     {"opponents", {"spots", "spots:easy", "spots:medium", "spots:hard", "scripted:drop",
                                    "random", "learned", "egreedy", "oracle", "explorer"}}})};
  }
  const std::string id = msg.contains("session") && msg["session"].is_string() ? msg["session"].get<std::string>()
                                                                                : std::string();
  if (type != "action" && type != "give_up" && type != "state") {
    return {error_message(id, "unknown_type", "unknown message type '" + type + "'")};
  }
  const auto session = find(id);
  if (!session) return {error_message(id, "unknown_session", "no session '" + id + "'")};
  if (type == "state") return {state_message(id)};
  std::lock_guard lock(session->mu);
  if (type == "give_up") return give_up(*session);
  if (!body.is_object() || !body.contains("action") || !body["action"].is_string()) {
    return {message("action_result", id, {{"accepted", false}, {"success", false}}),
            error_message(id, "malformed", "action message needs a string body.action")};
  }
  return act(*session, body["action"].get<std::string>());
}

std::vector<std::string> PlayService::create(const std::string& body_text) {
  const json body = json::parse(body_text);
  const auto role = role_from_string(body.value("role", std::string()));
  if (!role) return {error_message("", "bad_request", "role must be 'hider' or 'seeker'")};
  const std::string opponent = body.value("opponent", std::string());
  const bool familiarize = body.value("familiarize", false);
  std::uint64_t seed = 0;
  if (body.contains("seed")) {
    if (!body["seed"].is_number_unsigned()) return {error_message("", "bad_request", "seed must be unsigned")};
    seed = body["seed"].get<std::uint64_t>();
  }
  std::optional<std::string> scene_id;
  if (body.contains("scene") && body["scene"].is_string()) scene_id = body["scene"].get<std::string>();
  std::optional<GoalType> goal;
  if (body.contains("goal") && body["goal"].is_string()) {
    goal = goal_type_from_string(body["goal"].get<std::string>());
    if (!goal) return {error_message("", "bad_request", "unknown goal type")};
  }
  if (scene_id && !scenes_.count(*scene_id)) {
    return {error_message("", "unknown_scene", "no scene '" + *scene_id + "'")};
  }
  if (scenes_.empty()) return {error_message("", "unknown_scene", "no scenes loaded")};

  auto s = std::make_shared<Session>();
  s->role = *role;
  s->opponent = opponent;
  s->familiarize = familiarize;
  s->rng = Rng(seed);
  auto pick_scene = [&]() -> std::shared_ptr<const Scene> {
    if (scene_id) return scenes_.at(*scene_id);
    auto it = scenes_.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(s->rng.below(scenes_.size())));
    return it->second;
  };
  auto pick_goal = [&] { return goal ? *goal : kAllGoalTypes[s->rng.below(kAllGoalTypes.size())]; };
  auto make_agent = [&](const std::string& name) -> std::unique_ptr<Policy> {
    if (name == "learned") {
      if (!config_.learned) return nullptr;
      return std::make_unique<LearnedAgent>(config_.learned, std::make_shared<HideEvaluator>(),
                                            RolloutConfig{8, 200, 0.2});
    }
    return make_policy(name);
  };

  if (*role == Role::kSeeker && (opponent == "spots" || opponent.rfind("spots:", 0) == 0)) {
    std::optional<Difficulty> label;
    if (opponent != "spots") {
      label = difficulty_from_string(opponent.substr(6));
      if (!label) return {error_message("", "unknown_opponent", "unknown opponent '" + opponent + "'")};
    }
    std::vector<const HidingSpot*> pool;
    for (const HidingSpot& sp : config_.spots) {
      if (!scenes_.count(sp.scene_id) || (scene_id && sp.scene_id != *scene_id)) continue;
      if (label && sp.difficulty != label) continue;
      if (goal && sp.goal_type != *goal) continue;
      pool.push_back(&sp);
    }
    if (pool.empty()) return {error_message("", "unknown_opponent", "no spots for '" + opponent + "'")};
    const HidingSpot& sp = *pool[s->rng.below(pool.size())];
    const auto scene = scenes_.at(sp.scene_id);
    s->spot = sp;
    s->game = start_seeking(scene, sp.goal_type, HiddenRecord{sp.cell, sp.modality, sp.container},
                            std::vector<bool>(scene->objects().size(), false), seed, kHumanSeeker);
  } else if (*role == Role::kSeeker) {
    auto hider = make_agent(opponent);
    if (!hider || opponent == "oracle" || opponent == "egreedy" || opponent == "explorer") {
      return {error_message("", "unknown_opponent", "unknown hider opponent '" + opponent + "'")};
    }
    s->game = start_game(pick_scene(), pick_goal(), seed, kHumanSeeker);
    hider->begin(s->game, s->rng);
    while (!s->game.finished && s->game.stage != Stage::kS) {
      const StepResult r = play_action(s->game, hider->act(s->game, s->rng));
      hider->observe(s->game, r);
    }
  } else {
    s->agent = make_agent(opponent);
    if (!s->agent || opponent == "scripted:drop") {
      return {error_message("", "unknown_opponent", "unknown seeker opponent '" + opponent + "'")};
    }
    s->game = start_game(pick_scene(), pick_goal(), seed, kHumanHider);
    s->map.write(*s->game.scene, s->game.object_states, s->game.hider_pose, 0);
  }
  s->started = clock_();
  {
    std::lock_guard lock(mu_);
    s->id = "session-" + std::to_string(next_id_++);
    sessions_[s->id] = s;
  }
  std::lock_guard lock(s->mu);
  return {message("session_created", s->id,
                  {{"role", std::string(to_string(s->role))},
                   {"opponent", s->opponent},
                   {"scene", s->game.scene->id()},
                   {"goal", std::string(to_string(s->game.goal_type))},
                   {"familiarize", s->familiarize}}),
          state_payload(*s)};
}

std::string PlayService::state_payload(const Session& s) const {
  const GameState& g = s.game;
  const Scene& scene = *g.scene;
  const ViewWindow w = view_window(scene, g.object_states, g.acting_pose());
  json rows = json::array();
  for (int i = kWindowSize; i >= 1; --i) {
    json row = json::array();
    for (int j = 1; j <= kWindowSize; ++j) {
      const ViewCell& c = w.at(i, j);
      if (!c.in_bounds || !c.visible) {
        row.push_back(nullptr);
        continue;
      }
      json occ = json::array();
      for (const Occupant& o : c.occupants) {
        if (!o.visible) continue;
        occ.push_back({{"id", o.id}, {"kind", std::string(to_string(o.kind))}, {"open", o.open}});
      }
      row.push_back({{"terrain", std::string(to_string(c.terrain))}, {"occupants", occ}});
    }
    rows.push_back(row);
  }
  const double elapsed = clock_() - s.started;
  json body = {{"stage", std::string(to_string(g.stage))},
               {"t", g.t()},
               {"standing", g.acting_pose().standing},
               {"held", g.held.has_value()},
               {"hand", g.held ? json{{"i", g.held->i}, {"j", g.held->j},
                                      {"height", std::string(to_string(g.held->height))}}
                               : json(nullptr)},
               {"window", rows},
               {"finished", g.finished},
               {"elapsed", elapsed},
               {"give_up_allowed", elapsed >= kGiveUpAfterSeconds}};
  if (s.role == Role::kHider && !s.map.empty()) {
    int min_x = INT32_MAX, min_z = INT32_MAX, max_x = INT32_MIN, max_z = INT32_MIN;
    for (const auto& [c, o] : s.map.observed()) {
      min_x = std::min(min_x, c.x);
      min_z = std::min(min_z, c.z);
      max_x = std::max(max_x, c.x);
      max_z = std::max(max_z, c.z);
    }
    json grid = json::array();
    for (int z = min_z; z <= max_z; ++z) {
      std::string line;
      for (int x = min_x; x <= max_x; ++x) {
        const auto it = s.map.observed().find(Cell{x, z});
        char ch = '?';
        if (it != s.map.observed().end()) {
          switch (it->second.terrain) {
            case Terrain::kFloor: ch = '.'; break;
            case Terrain::kWall: ch = '#'; break;
            case Terrain::kFurnitureLow: ch = 'l'; break;
            case Terrain::kFurnitureHigh: ch = 'h'; break;
          }
          for (const WorldObject& o : it->second.objects) ch = o.kind == ObjectKind::kOccluder ? 'o' : 'r';
        }
        if (g.hider_pose.x == x && g.hider_pose.z == z) ch = '@';
        line += ch;
      }
      grid.push_back(line);
    }
    body["map"] = {{"min_x", min_x}, {"min_z", min_z}, {"rows", grid}};
  }
  return message("state", s.id, std::move(body));
}

std::string PlayService::state_message(const std::string& id) {
  const auto s = find(id);
  if (!s) return error_message(id, "unknown_session", "no session '" + id + "'");
  std::lock_guard lock(s->mu);
  return state_payload(*s);
}

std::vector<std::string> PlayService::act(Session& s, const std::string& text) {
  std::vector<std::string> out;
  auto reject = [&](std::string_view code, const std::string& why) {
    out.push_back(message("action_result", s.id, {{"action", text}, {"accepted", false}, {"success", false}}));
    out.push_back(error_message(s.id, code, why));
    return out;
  };
  if (s.ended || s.game.finished) return reject("session_ended", "the trial has ended");
  GameState& g = s.game;
  const Stage before = g.stage;
  const bool my_turn = (s.role == Role::kHider) == hider_stage(g.stage);
  if (!my_turn) return reject("illegal_action", "not your stage");

  if (text == "RetryHiding") {
    if (s.role != Role::kHider || !restart_hiding(g)) return reject("illegal_action", "nothing to pick up");
    ++s.actions;
    out.push_back(message("action_result", s.id, {{"action", text}, {"accepted", true}, {"success", true}}));
    out.push_back(state_payload(s));
    return out;
  }
  Action a;
  try {
    a = parse_action(text);
  } catch (const ParseError& e) {
    return reject("bad_action", e.what());
  }
  const bool ends_exploration = g.stage == Stage::kEM && a.kind == ActionKind::kChooseHidePose && g.limits.em == 0;
  if (!is_legal(g.stage, a.kind) && !ends_exploration) {
    return reject("illegal_action", std::string(to_string(a.kind)) + " is not available in " +
                                        std::string(to_string(g.stage)));
  }
  const StepResult r = play_action(g, a);
  ++s.actions;
  if (g.history.back().stage == Stage::kEM) {
    s.map.write(*g.scene, g.object_states, g.hider_pose, g.em_t);
  }
  out.push_back(message("action_result", s.id,
                        {{"action", text},
                         {"accepted", true},
                         {"success", r.success},
                         {"claim", r.claim_failure == ClaimFailure::kNone
                                       ? json(nullptr)
                                       : json(r.claim_failure == ClaimFailure::kTooFar ? "too_far" : "not_visible")}}));
  if (s.role == Role::kHider && g.stage == Stage::kS && !g.finished) {
    s.agent->begin(g, s.rng);
    while (!g.finished) {
      const StepResult sr = play_action(g, s.agent->act(g, s.rng));
      s.agent->observe(g, sr);
    }
  }
  if (g.stage != before) {
    out.push_back(message("stage_change", s.id,
                          {{"from", std::string(to_string(before))}, {"to", std::string(to_string(g.stage))}}));
  }
  out.push_back(state_payload(s));
  if (g.finished) {
    for (std::string& m : finish(s, true, false)) out.push_back(std::move(m));
  }
  return out;
}

std::vector<std::string> PlayService::give_up(Session& s) {
  if (s.ended) return {error_message(s.id, "session_ended", "the trial has ended")};
  const double age = clock_() - s.started;
  if (age < kGiveUpAfterSeconds) {
    return {error_message(s.id, "give_up_too_early", "give up is allowed after 100 seconds",
                          {{"retry_after", kGiveUpAfterSeconds - age}})};
  }
  return finish(s, false, true);
}

std::vector<std::string> PlayService::finish(Session& s, bool complete, bool gave_up) {
  s.ended = true;
  const bool human_hider = s.role == Role::kHider;
  TrialRecord rec;
  rec.session = s.id;
  rec.role = s.role;
  rec.opponent = s.opponent;
  rec.scene_id = s.game.scene->id();
  rec.spot = s.spot;
  rec.actions = s.actions;
  rec.started = s.started;
  rec.ended = clock_();
  rec.complete = complete;
  rec.gave_up = gave_up;
  rec.report = report_from_game(s.game, human_hider ? "human" : s.opponent, human_hider ? s.opponent : "human",
                                config_.report);
  if (!s.familiarize) log_trial(rec);
  const MatchReport& rep = rec.report;
  json body = {{"complete", complete},
               {"gave_up", gave_up},
               {"familiarize", s.familiarize},
               {"outcome", format_outcome(rep.outcome)},
               {"found", rep.found},
               {"seeker_steps", rep.seeker_steps},
               {"percentile", rep.percentile ? json(*rep.percentile) : json(nullptr)}};
  if (rep.exploration) {
    body["exploration"] = {{"coverage", rep.exploration->coverage},
                           {"coverage_plus", rep.exploration->coverage_plus},
                           {"open_pct", rep.exploration->open_pct}};
  }
  if (rep.hiding) {
    body["hiding"] = {{"visible_from_pct", rep.hiding->visible_from_pct},
                      {"bfs_steps_pct", rep.hiding->bfs_steps_pct}};
  }
  return {message("trial_end", s.id, std::move(body))};
}

void PlayService::abandon(const std::string& id) {
  const auto s = find(id);
  if (!s) return;
  std::lock_guard lock(s->mu);
  if (!s->ended) finish(*s, false, false);
}

std::uint64_t PlayService::state_hash_of(const std::string& id) {
  const auto s = find(id);
  if (!s) throw PreconditionError("no session '" + id + "'");
  std::lock_guard lock(s->mu);
  return state_hash(s->game);
}

void PlayService::log_trial(const TrialRecord& record) {
  if (config_.log_dir.empty()) return;
  std::lock_guard lock(log_mu_);
  const std::string path = config_.log_dir + "/trials.jsonl";
  std::ofstream out(path, std::ios::app | std::ios::binary);
  const std::string line = serialize_trial(record);
  out << line;
  out.flush();
  if (!out) {
    const std::string what = "trial log: cannot append to '" + path + "'";
    if (config_.on_log_error) {
      config_.on_log_error(what);
    } else {
      std::cerr << what << "\n";
    }
  }
}

// ---------------------------------------------------------------- HTTP

struct HttpServer::Impl {
  PlayService& service;
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(PlayService& service) : impl_(new Impl{service, {}, {}}) {
  impl_->server.Post("/api/message", [this](const httplib::Request& req, httplib::Response& res) {
    json arr = json::array();
    for (const std::string& m : impl_->service.handle(req.body)) arr.push_back(json::parse(m));
    res.set_content(arr.dump(), "application/json");
  });
  impl_->server.Get(R"(/api/sessions/([^/]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
    res.set_content(impl_->service.state_message(req.matches[1]), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  return bound;
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

// ---------------------------------------------------------------- frames

std::string encode_frame(std::string_view payload) {
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out.append(payload);
  return out;
}

namespace {

constexpr std::uint32_t kMaxFrame = 1u << 20;

bool read_exact(int fd, char* buf, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::recv(fd, buf, n, 0);
    if (k <= 0) return false;
    buf += k;
    n -= static_cast<std::size_t>(k);
  }
  return true;
}

}  // namespace

std::optional<std::string> read_frame(int fd) {
  unsigned char hdr[4];
  if (!read_exact(fd, reinterpret_cast<char*>(hdr), 4)) return std::nullopt;
  const std::uint32_t n = (std::uint32_t{hdr[0]} << 24) | (std::uint32_t{hdr[1]} << 16) |
                          (std::uint32_t{hdr[2]} << 8) | std::uint32_t{hdr[3]};
  if (n > kMaxFrame) return std::nullopt;
  std::string payload(n, '\0');
  if (n > 0 && !read_exact(fd, payload.data(), n)) return std::nullopt;
  return payload;
}

bool write_frame(int fd, std::string_view payload) {
  const std::string frame = encode_frame(payload);
  std::size_t sent = 0;
  while (sent < frame.size()) {
    const ssize_t k = ::send(fd, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
    if (k <= 0) return false;
    sent += static_cast<std::size_t>(k);
  }
  return true;
}

FrameServer::FrameServer(PlayService& service) : service_(service) {}

FrameServer::~FrameServer() { stop(); }

int FrameServer::start(const std::string& host, int port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error("socket failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw Error("bad host '" + host + "'");
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  return ntohs(addr.sin_port);
}

void FrameServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) return;
      continue;
    }
    std::lock_guard lock(mu_);
    fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void FrameServer::serve(int fd) {
  std::vector<std::string> created;
  while (auto frame = read_frame(fd)) {
    for (const std::string& m : service_.handle(*frame)) {
      const json j = json::parse(m);
      if (j.at("type") == "session_created") created.push_back(j.at("session").get<std::string>());
      if (!write_frame(fd, m)) break;
    }
  }
  for (const std::string& id : created) service_.abandon(id);
  ::shutdown(fd, SHUT_RDWR);
}

void FrameServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  for (int fd : fds_) ::close(fd);
  fds_.clear();
}

}  // namespace gridcache
