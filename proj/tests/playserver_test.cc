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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "gridcache/error.h"
#include "gridcache/playserver.h"
#include "httplib.h"
#include "json.hpp"
#include "support.h"

using namespace gridcache;
using nlohmann::json;

namespace {

struct FakeClock {
  std::shared_ptr<std::atomic<double>> now = std::make_shared<std::atomic<double>>(0.0);
  Clock clock() const {
    auto n = now;
    return [n] { return n->load(); };
  }
};

SceneIndex index() { return {{"room9", support::room9()}}; }

ServiceConfig spots_config() {
  ServiceConfig cfg;
  Rng rng(1);
  const auto labeled = label_difficulty(enumerate_spots(*support::room9(), GoalType::kCup), rng, 20);
  cfg.spots = labeled.spots;
  return cfg;
}

std::vector<json> parse_all(const std::vector<std::string>& msgs) {
  std::vector<json> out;
  for (const auto& m : msgs) out.push_back(json::parse(m));
  return out;
}

json send(PlayService& svc, const json& msg) {
  const auto out = parse_all(svc.handle(msg.dump()));
  return json(out);
}

std::string create(PlayService& svc, const std::string& role, const std::string& opponent,
                   std::uint64_t seed = 1) {
  const json out = send(svc, {{"type", "hello"}, {"body", {{"role", role}, {"opponent", opponent},
                                                           {"scene", "room9"}, {"goal", "cup"}, {"seed", seed}}}});
  REQUIRE(out.size() == 2);
  REQUIRE(out[0]["type"] == "session_created");
  CHECK(out[1]["type"] == "state");
  return out[0]["session"].get<std::string>();
}

json act(PlayService& svc, const std::string& id, const std::string& action) {
  return send(svc, {{"type", "action"}, {"session", id}, {"body", {{"action", action}}}});
}

}  // namespace

TEST_CASE("hello and session creation") {
  PlayService svc(index(), spots_config());
  json out = send(svc, {{"type", "hello"}});
  REQUIRE(out.size() == 1);
  CHECK(out[0]["type"] == "hello");
  CHECK(out[0]["body"]["scenes"] == json::array({"room9"}));

  const std::string h = create(svc, "hider", "explorer");
  const std::string s = create(svc, "seeker", "spots:hard");
  CHECK(h == "session-1");
  CHECK(s == "session-2");
  CHECK(svc.session_count() == 2);
  const json state = json::parse(svc.state_message(s));
  CHECK(state["body"]["stage"] == "S");
  CHECK(state["body"]["window"].size() == 7);

  auto code = [&](const json& msg) {
    const json o = send(svc, msg);
    REQUIRE(o.size() >= 1);
    CHECK(o.back()["type"] == "error");
    return o.back()["body"]["code"].get<std::string>();
  };
  CHECK(code({{"type", "hello"}, {"body", {{"role", "judge"}}}}) == "bad_request");
  CHECK(code({{"type", "hello"}, {"body", {{"role", "hider"}, {"opponent", "explorer"}, {"scene", "x"}}}}) ==
        "unknown_scene");
  CHECK(code({{"type", "hello"}, {"body", {{"role", "hider"}, {"opponent", "scripted:drop"}}}}) ==
        "unknown_opponent");
  CHECK(code({{"type", "hello"}, {"body", {{"role", "seeker"}, {"opponent", "oracle"}}}}) == "unknown_opponent");
  CHECK(code({{"type", "hello"}, {"body", {{"role", "seeker"}, {"opponent", "learned"}}}}) == "unknown_opponent");
  CHECK(code({{"type", "dance"}, {"session", h}}) == "unknown_type");
  CHECK(code({{"type", "action"}, {"session", "session-99"}, {"body", {{"action", "MoveAhead"}}}}) ==
        "unknown_session");
  CHECK(code({{"type", "action"}, {"session", h}}) == "malformed");
  const auto bad = parse_all(svc.handle("{not json"));
  REQUIRE(bad.size() == 1);
  CHECK(bad[0]["body"]["code"] == "malformed");
  CHECK(parse_all(svc.handle("[]"))[0]["body"]["code"] == "malformed");
}

TEST_CASE("illegal actions are rejected without touching the game") {
  PlayService svc(index(), {});
  const std::string id = create(svc, "hider", "explorer");
  const std::uint64_t before = svc.state_hash_of(id);
  json out = act(svc, id, "ClaimVisible");
  REQUIRE(out.size() == 2);
  CHECK(out[0]["type"] == "action_result");
  CHECK(out[0]["body"]["accepted"] == false);
  CHECK(out[1]["body"]["code"] == "illegal_action");
  out = act(svc, id, "Jump");
  CHECK(out[1]["body"]["code"] == "bad_action");
  CHECK(svc.state_hash_of(id) == before);

  out = act(svc, id, "RotateLeft");
  CHECK(out[0]["body"]["accepted"] == true);
  CHECK(out[0]["body"]["success"] == true);
  CHECK(out.back()["type"] == "state");
  CHECK(svc.state_hash_of(id) != before);
}

TEST_CASE("a human hider game runs to the end") {
  PlayService svc(index(), {});
  const std::string id = create(svc, "hider", "oracle");
  act(svc, id, "RotateLeft");
  json out = act(svc, id, "ChooseHidePose|1,1,180,1");
  CHECK(out[0]["body"]["accepted"] == true);
  bool saw_change = false;
  for (const auto& m : out) saw_change |= m["type"] == "stage_change";
  CHECK(saw_change);
  out = act(svc, id, "ReadyForSeeker");
  CHECK(out[0]["body"]["success"] == false);  // nothing placed yet
  CHECK(act(svc, id, "PlaceAt|0,1,4")[0]["body"]["accepted"] == true);
  CHECK(act(svc, id, "DropObject")[0]["body"]["success"] == true);
  out = act(svc, id, "ReadyForSeeker");
  REQUIRE(out.back()["type"] == "trial_end");
  const json& end = out.back()["body"];
  CHECK(end["complete"] == true);
  CHECK(end["found"] == true);
  CHECK(end["exploration"]["coverage"].get<double>() > 0.0);
  out = act(svc, id, "RotateLeft");
  CHECK(out[1]["body"]["code"] == "session_ended");
}

TEST_CASE("give up waits for the time limit") {
  FakeClock fc;
  PlayService svc(index(), spots_config(), fc.clock());
  const std::string id = create(svc, "seeker", "spots");
  fc.now->store(30.0);
  json out = send(svc, {{"type", "give_up"}, {"session", id}});
  REQUIRE(out.size() == 1);
  CHECK(out[0]["body"]["code"] == "give_up_too_early");
  CHECK(out[0]["body"]["retry_after"].get<double>() == 70.0);
  CHECK(json::parse(svc.state_message(id))["body"]["give_up_allowed"] == false);
  fc.now->store(100.0);
  CHECK(json::parse(svc.state_message(id))["body"]["give_up_allowed"] == true);
  out = send(svc, {{"type", "give_up"}, {"session", id}});
  REQUIRE(out.back()["type"] == "trial_end");
  CHECK(out.back()["body"]["gave_up"] == true);
  CHECK(out.back()["body"]["complete"] == false);
}

TEST_CASE("trial log lines round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "gridcache_trials_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  ServiceConfig cfg = spots_config();
  cfg.log_dir = dir.string();
  FakeClock fc;
  PlayService svc(index(), cfg, fc.clock());
  const std::string id = create(svc, "seeker", "spots:easy", 3);
  act(svc, id, "RotateRight");
  svc.abandon(id);
  const std::string text = read_file((dir / "trials.jsonl").string());
  REQUIRE(text.back() == '\n');
  const TrialRecord r = parse_trial(text);
  CHECK(r.session == id);
  CHECK(r.role == Role::kSeeker);
  CHECK(r.actions == 1);
  CHECK_FALSE(r.complete);
  CHECK_FALSE(r.gave_up);
  REQUIRE(r.spot.has_value());
  CHECK(r.spot->difficulty == Difficulty::kEasy);
  CHECK(r.report.seek_only);
  CHECK(parse_trial(serialize_trial(r)) == r);
  CHECK_THROWS_AS(parse_trial("{}"), ParseError);
  CHECK_THROWS_AS(parse_trial("nope"), ParseError);
  json j = json::parse(text);
  j["version"] = 9;
  CHECK_THROWS_AS(parse_trial(j.dump()), VersionError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("human play matches a scripted replay") {
  PlayService svc(index(), {});
  const std::string id = create(svc, "hider", "explorer", 4);
  const std::vector<std::string> script{"MoveAhead", "RotateRight", "MoveAhead", "ChooseHidePose|2,0,180,1",
                                        "PlaceAt|0,1,4", "DropObject", "ReadyForSeeker"};
  json last;
  for (const auto& a : script) {
    last = act(svc, id, a);
    CAPTURE(a);
    CHECK(last[0]["body"]["accepted"] == true);
  }
  INFO(last.dump());
  REQUIRE(last.back()["type"] == "trial_end");
  const MatchReport want = run_scripted(support::room9(), GoalType::kCup, script, 4, GameLimits{0, 0, 0, 0, 500});
  CHECK(last.back()["body"]["outcome"] == format_outcome(want.outcome));
}

TEST_CASE("concurrent sessions stay isolated") {
  PlayService svc(index(), spots_config());
  const int kThreads = 4;
  std::vector<std::string> ids;
  for (int k = 0; k < kThreads; ++k) ids.push_back(create(svc, "seeker", "spots", static_cast<std::uint64_t>(k)));
  std::vector<std::uint64_t> hashes(kThreads);
  std::atomic<int> errors{0};
  std::vector<std::thread> threads;
  for (int k = 0; k < kThreads; ++k) {
    threads.emplace_back([&, k] {
      Rng rng(static_cast<std::uint64_t>(k));
      const std::vector<std::string> moves{"MoveAhead", "RotateLeft", "RotateRight", "LookUp", "LookDown",
                                           "Crouch", "Stand", "Junk", "OpenAt|3,4"};
      for (int n = 0; n < 150; ++n) {
        try {
          svc.handle(json{{"type", "action"}, {"session", ids[k]},
                          {"body", {{"action", moves[rng.below(moves.size())]}}}}.dump());
          // Fuzzed junk on the shared service.
          svc.handle("{\"type\":\"action\",\"session\":\"session-x\"}");
          svc.handle(std::string(1, static_cast<char>(rng.below(128))));
        } catch (...) {
          ++errors;
        }
      }
      hashes[k] = svc.state_hash_of(ids[k]);
    });
  }
  for (auto& t : threads) t.join();
  CHECK(errors == 0);
  CHECK(svc.session_count() == static_cast<std::size_t>(kThreads));
  for (int k = 0; k < kThreads; ++k) CHECK(svc.state_hash_of(ids[k]) == hashes[k]);
}

TEST_CASE("HTTP transport") {
  PlayService svc(index(), {});
  HttpServer server(svc);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Post("/api/message",
                      json{{"type", "hello"}, {"body", {{"role", "hider"}, {"opponent", "random"}}}}.dump(),
                      "application/json");
  REQUIRE(res);
  const json arr = json::parse(res->body);
  REQUIRE(arr.is_array());
  REQUIRE(arr[0]["type"] == "session_created");
  const std::string id = arr[0]["session"].get<std::string>();
  res = cli.Get(("/api/sessions/" + id + "/state").c_str());
  REQUIRE(res);
  CHECK(json::parse(res->body)["type"] == "state");
  server.stop();
}

TEST_CASE("frame transport") {
  CHECK(encode_frame("ab") == std::string("\0\0\0\2ab", 6));
  PlayService svc(index(), {});
  FrameServer server(svc);
  const int port = server.start("127.0.0.1", 0);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  REQUIRE(write_frame(fd, json{{"type", "hello"}, {"body", {{"role", "hider"}, {"opponent", "random"}}}}.dump()));
  const auto created = read_frame(fd);
  REQUIRE(created.has_value());
  const json c = json::parse(*created);
  CHECK(c["type"] == "session_created");
  const auto state = read_frame(fd);
  REQUIRE(state.has_value());
  CHECK(json::parse(*state)["type"] == "state");
  ::close(fd);
  server.stop();
  // Closing the connection abandons the session it created.
  const json out = json::parse(svc.handle(json{{"type", "action"}, {"session", c["session"]},
                                               {"body", {{"action", "RotateLeft"}}}}.dump())[1]);
  CHECK(out["body"]["code"] == "session_ended");
}
