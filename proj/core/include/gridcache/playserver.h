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

#ifndef GRIDCACHE_PLAYSERVER_H_
#define GRIDCACHE_PLAYSERVER_H_

// Live games for human trials. PlayService turns inbound wire messages into
// outbound ones; the HTTP and TCP transports only move bytes. Message
// schemas are documented in docs/wire.md.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gridcache/harness.h"
#include "gridcache/learner.h"
#include "gridcache/perspective.h"

namespace gridcache {

enum class Role : std::uint8_t { kHider, kSeeker };
std::string_view to_string(Role r);
std::optional<Role> role_from_string(std::string_view s);

// Seconds since an arbitrary epoch.
using Clock = std::function<double()>;
Clock steady_clock();

inline constexpr double kGiveUpAfterSeconds = 100.0;

// One finished or abandoned trial.
struct TrialRecord {
  std::string session;
  Role role = Role::kHider;
  std::string opponent;
  std::string scene_id;
  std::optional<HidingSpot> spot;  // seeker trials against a spot set
  int actions = 0;                 // human messages applied
  double started = 0.0;
  double ended = 0.0;
  bool complete = false;
  bool gave_up = false;
  MatchReport report;
  bool operator==(const TrialRecord&) const = default;
};

// One JSON object per line.
std::string serialize_trial(const TrialRecord& record);
// Throws ParseError or VersionError.
TrialRecord parse_trial(std::string_view line);

struct ServiceConfig {
  std::vector<HidingSpot> spots;                   // for spots / spots:<label>
  std::shared_ptr<const LinearPolicy> learned;     // for learned
  std::string log_dir;                             // empty disables the trial log
  std::function<void(const std::string&)> on_log_error;  // operator channel
  ReportConfig report;
};

// Opponent names: spots, spots:<easy|medium|hard>, scripted:drop, random,
// learned, egreedy, oracle, explorer.
class PlayService {
 public:
  PlayService(SceneIndex scenes, ServiceConfig config, Clock clock = steady_clock());
  ~PlayService();

  // Handles one inbound message and returns the outbound messages in order.
  // Never throws for client input.
  std::vector<std::string> handle(std::string_view message);

  // State message of a session, or an error message.
  std::string state_message(const std::string& session);

  // Logs an incomplete record for a session that never ended.
  void abandon(const std::string& session);

  std::uint64_t state_hash_of(const std::string& session);
  std::size_t session_count() const;

 private:
  struct Session;

  std::vector<std::string> create(const std::string& body);
  std::vector<std::string> act(Session& s, const std::string& action_text);
  std::vector<std::string> give_up(Session& s);
  std::shared_ptr<Session> find(const std::string& id) const;
  std::string state_payload(const Session& s) const;
  std::vector<std::string> finish(Session& s, bool complete, bool gave_up);
  void log_trial(const TrialRecord& record);

  SceneIndex scenes_;
  ServiceConfig config_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
  std::mutex log_mu_;
};

// HTTP: POST /api/message (body: one message, reply: JSON array of
// messages) and GET /api/sessions/{id}/state.
class HttpServer {
 public:
  explicit HttpServer(PlayService& service);
  ~HttpServer();
  // Binds and serves on a background thread; returns the bound port.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Persistent connections carrying frames of a 4-byte big-endian length
// followed by one JSON message. Sessions created on a connection are
// abandoned when it closes.
class FrameServer {
 public:
  explicit FrameServer(PlayService& service);
  ~FrameServer();
  int start(const std::string& host, int port);
  void stop();

 private:
  void accept_loop();
  void serve(int fd);

  PlayService& service_;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<int> fds_;
};

// Frame helpers shared with clients and tests.
std::string encode_frame(std::string_view payload);
// Blocking read of one frame; nullopt on EOF or error.
std::optional<std::string> read_frame(int fd);
bool write_frame(int fd, std::string_view payload);

}  // namespace gridcache

#endif  // GRIDCACHE_PLAYSERVER_H_
