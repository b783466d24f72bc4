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

#include "gridcache/harness.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"

#include "gridcache/error.h"
#include "gridcache/learner.h"
#include "gridcache/perspective.h"

namespace gridcache {

using json = nlohmann::ordered_json;

namespace {

Action random_nav(Rng& rng) {
  const auto& nav = VisibilityField::kNavActions;
  return Action::simple(nav[rng.below(nav.size())]);
}

bool goal_container_open(const GameState& state) {
  const auto& goal = state.object_states.goal;
  return !goal || !goal->container || state.object_states.is_open(*goal->container);
}

bool within_range(Cell a, Cell b) {
  const int dx = a.x - b.x;
  const int dz = a.z - b.z;
  return dx * dx + dz * dz <= kInteractRange * kInteractRange;
}

}  // namespace

// ---------------------------------------------------------------- policies

StepResult play_action(GameState& state, const Action& action) {
  if (state.stage == Stage::kEM && action.kind == ActionKind::kChooseHidePose && state.limits.em == 0) {
    end_exploration(state);
  }
  if (is_legal(state.stage, action.kind)) return apply_action(state, action);
  return fail_action(state, action);
}

Action RandomPolicy::act(const GameState& state, Rng& rng) {
  if (state.stage == Stage::kPS) {
    const auto cells = reachable_cells(*state.scene);
    const Cell c = cells[rng.below(cells.size())];
    const auto rot = static_cast<Rotation>(rng.below(4));
    const bool standing = rng.below(2) == 1;
    return Action::choose_hide_pose(c.x - state.hider_pose.x, c.z - state.hider_pose.z, rot, standing);
  }
  const auto& space = action_space(state.stage);
  return space[rng.below(space.size())];
}

Action DropAtStartHider::act(const GameState& state, Rng& /*rng*/) {
  switch (state.stage) {
    case Stage::kPS:
      return Action::choose_hide_pose(0, 0, state.hider_pose.rotation, state.hider_pose.standing);
    case Stage::kOH: return Action::simple(ActionKind::kReadyForSeeker);
    case Stage::kOM: return Action::simple(ActionKind::kDropObject);
    default: return Action::simple(ActionKind::kRotateRight);
  }
}

void OracleSeeker::begin(const GameState& state, Rng& /*rng*/) {
  field_.emplace(*state.scene, state.object_states);
}

Action OracleSeeker::act(const GameState& state, Rng& rng) {
  if (!field_) field_.emplace(*state.scene, state.object_states);
  const VisibilityField::State s{state.seeker_pose, goal_container_open(state)};
  if (field_->visible(s)) return Action::simple(ActionKind::kClaimVisible);
  if (epsilon_ > 0.0 && rng.bernoulli(epsilon_)) return random_nav(rng);
  if (auto a = field_->best_action(s)) return *a;
  return random_nav(rng);
}

void ExploringSeeker::begin(const GameState& state, Rng& /*rng*/) {
  const Scene& scene = *state.scene;
  field_.emplace(scene, state.object_states);
  view_cells_.clear();
  for (const Pose& p : reachable_poses(scene)) {
    const ViewWindow w = view_window(scene, state.object_states, p);
    std::vector<int>& cells = view_cells_[p];
    for (const ViewCell& c : w.cells) {
      if (c.in_bounds && c.visible) cells.push_back(scene.index(c.world));
    }
  }
  seen_.assign(scene.cell_count(), false);
  tried_open_.assign(scene.objects().size(), false);
  route_.clear();
}

std::optional<Action> ExploringSeeker::frontier_action(const Pose& from) {
  auto shows_unseen = [&](const Pose& p) {
    const auto it = view_cells_.find(p);
    if (it == view_cells_.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](int c) { return !seen_[static_cast<std::size_t>(c)]; });
  };
  std::map<Pose, std::pair<Pose, Action>> parent;
  std::deque<Pose> queue{from};
  parent.emplace(from, std::pair{from, Action{}});
  while (!queue.empty()) {
    const Pose p = queue.front();
    queue.pop_front();
    if (p != from && shows_unseen(p)) {
      route_.clear();
      for (Pose q = p; q != from;) {
        const auto& [prev, a] = parent.at(q);
        route_.emplace_back(prev, a);
        q = prev;
      }
      const Action a = route_.back().second;
      route_.pop_back();
      return a;
    }
    for (ActionKind k : VisibilityField::kNavActions) {
      const auto next = field_->successor({p, true}, Action::simple(k));
      if (!next || parent.count(next->pose)) continue;
      parent.emplace(next->pose, std::pair{p, Action::simple(k)});
      queue.push_back(next->pose);
    }
  }
  return std::nullopt;
}

Action ExploringSeeker::act(const GameState& state, Rng& rng) {
  if (!field_) begin(state, rng);
  const Scene& scene = *state.scene;
  const Pose& pose = state.seeker_pose;
  if (const auto it = view_cells_.find(pose); it != view_cells_.end()) {
    for (int c : it->second) seen_[static_cast<std::size_t>(c)] = true;
  }
  const std::string goal(kGoalObjectId);
  if (object_visible(scene, state.object_states, pose, goal, kInteractRange)) {
    return Action::simple(ActionKind::kClaimVisible);
  }
  if (epsilon_ > 0.0 && rng.bernoulli(epsilon_)) {
    route_.clear();
    return random_nav(rng);
  }
  if (object_visible(scene, state.object_states, pose, goal, std::nullopt)) {
    route_.clear();
    if (auto a = field_->best_action({pose, goal_container_open(state)})) return *a;
  }
  const ViewWindow w = view_window(scene, state.object_states, pose);
  for (int i = 1; i <= kWindowSize; ++i) {
    for (int j = 1; j <= kWindowSize; ++j) {
      const ViewCell& c = w.at(i, j);
      if (!c.in_bounds || !c.visible || !within_range(pose.cell(), c.world)) continue;
      for (std::size_t k : scene.objects_at(c.world)) {
        if (!scene.objects()[k].openable || state.object_states.is_open(k) || tried_open_[k]) continue;
        tried_open_[k] = true;
        route_.clear();
        return Action::open_at(i, j);
      }
    }
  }
  if (!route_.empty() && route_.back().first == pose) {
    const Action a = route_.back().second;
    route_.pop_back();
    return a;
  }
  route_.clear();
  if (auto a = frontier_action(pose)) return *a;
  // Everything has been seen once: look again.
  std::fill(seen_.begin(), seen_.end(), false);
  std::fill(tried_open_.begin(), tried_open_.end(), false);
  return random_nav(rng);
}

std::unique_ptr<Policy> make_policy(std::string_view name) {
  if (name == "random") return std::make_unique<RandomPolicy>();
  if (name == "scripted:drop") return std::make_unique<DropAtStartHider>();
  if (name == "oracle") return std::make_unique<OracleSeeker>();
  if (name == "egreedy") return std::make_unique<OracleSeeker>(0.2);
  if (name == "explorer") return std::make_unique<ExploringSeeker>(0.2);
  return nullptr;
}

// ---------------------------------------------------------------- reports

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct Reconstruction {
  std::vector<double> hide_values;
  double start_value = 0.0;
  ObjectStates at_seek_start;
  bool seek_started = false;
  std::vector<bool> initial_open;
};

// Walks the history forward from the initial object states.
Reconstruction reconstruct(const GameState& game, bool seek_only) {
  const Scene& scene = *game.scene;
  Reconstruction out;
  std::vector<bool> open = game.object_states.open;
  for (auto it = game.history.rbegin(); it != game.history.rend(); ++it) {
    for (std::size_t k : it->opened) open[k] = false;
    for (std::size_t k : it->closed) open[k] = true;
  }
  out.initial_open = open;
  ObjectStates states = ObjectStates::initial(scene);
  states.open = open;
  MetricMap map;
  if (!seek_only) {
    map.write(scene, states, game.em_start, 0);
    out.start_value = heuristic_hide_value(map, game.em_start);
  }
  for (const StepRecord& r : game.history) {
    if (r.stage == Stage::kS && !out.seek_started) {
      out.seek_started = true;
      out.at_seek_start = states;
      out.at_seek_start.goal = game.object_states.goal;
    }
    for (std::size_t k : r.opened) states.open[k] = true;
    for (std::size_t k : r.closed) states.open[k] = false;
    if (r.stage == Stage::kEM) {
      map.write(scene, states, r.pose_after, r.stage_t + 1);
      out.hide_values.push_back(heuristic_hide_value(map, r.pose_after));
    }
  }
  if (!out.seek_started && game.stage == Stage::kS) {
    out.seek_started = true;
    out.at_seek_start = states;
    out.at_seek_start.goal = game.object_states.goal;
  }
  return out;
}

}  // namespace

MatchReport report_from_game(const GameState& game, std::string_view hider, std::string_view seeker,
                             const ReportConfig& cfg) {
  const Scene& scene = *game.scene;
  MatchReport rep;
  rep.scene_id = scene.id();
  rep.goal_type = game.goal_type;
  rep.seed = game.rng_seed;
  rep.hider = std::string(hider);
  rep.seeker = std::string(seeker);
  rep.limits = game.limits;
  rep.seek_only = game.stage == Stage::kS &&
                  std::all_of(game.history.begin(), game.history.end(),
                              [](const StepRecord& r) { return r.stage == Stage::kS; }) &&
                  game.em_t == 0;
  const Reconstruction rc = reconstruct(game, rep.seek_only);
  if (rep.seek_only) {
    rep.start_hidden = game.hidden;
    rep.start_open = rc.initial_open;
  }
  rep.hidden = game.hidden;

  Rng rng(mix(game.rng_seed, 0x7265706f7274ULL));
  std::optional<GameOutcome> outcome;
  if (game.stage == Stage::kS) outcome = outcome_of_game(game);
  if (outcome) {
    rep.outcome = outcome->hide;
    rep.found = outcome->found;
    rep.seeker_steps = outcome->seeker_steps;
    if (!rep.seek_only && !outcome->hide.fail && outcome->seeking_done && game.object_states.goal) {
      RolloutConfig pc;
      pc.rollouts = cfg.percentile_rollouts;
      pc.max_steps = game.limits.s > 0 ? game.limits.s : 500;
      const std::vector<int> lengths = mental_rollouts(scene, *game.object_states.goal, game.em_start, pc, rng);
      rep.percentile = oh_percentile(outcome->seeker_steps, lengths);
    }
    if (rc.seek_started && rc.at_seek_start.goal) {
      rep.hiding = hiding_metrics(scene, rc.at_seek_start, game.em_start.cell());
    }
  }

  const StageTraces traces = stage_traces(game, rc.hide_values, rc.start_value);
  if (!rep.seek_only) rep.exploration = exploration_metrics(traces.em, scene);

  std::vector<double> em_r, oh_r, s_r;
  for (std::size_t t = 0; t < traces.em.steps.size(); ++t) em_r.push_back(em_reward(traces.em, t, cfg.rewards));
  for (std::size_t t = 0; t < traces.oh.steps.size(); ++t) {
    oh_r.push_back(oh_reward(traces.oh, t, cfg.om_success_p, rep.percentile, cfg.rewards));
  }
  std::vector<double> om_r;
  for (const OmEpisode& ep : traces.om) {
    for (std::size_t t = 0; t < ep.trace.steps.size(); ++t) om_r.push_back(om_reward(ep.trace, t, ep.target, cfg.rewards));
  }
  if (traces.s) {
    for (std::size_t t = 0; t < traces.s->steps.size(); ++t) s_r.push_back(s_reward(*traces.s, t, cfg.rewards));
  }
  std::size_t ie = 0, io = 0, im = 0, is = 0;
  for (const StepRecord& r : game.history) {
    ReportStep st{r.stage, format_action(r.action), r.success, 0.0};
    switch (r.stage) {
      case Stage::kEM: st.reward = ie < em_r.size() ? em_r[ie++] : 0.0; break;
      case Stage::kPS: break;
      case Stage::kOH: st.reward = io < oh_r.size() ? oh_r[io++] : 0.0; break;
      case Stage::kOM: st.reward = im < om_r.size() ? om_r[im++] : 0.0; break;
      case Stage::kS: st.reward = is < s_r.size() ? s_r[is++] : 0.0; break;
    }
    rep.returns[static_cast<std::size_t>(r.stage)] += st.reward;
    rep.steps.push_back(std::move(st));
  }
  return rep;
}

MatchReport run_match(std::shared_ptr<const Scene> scene, GoalType goal_type, Policy& hider, Policy& seeker,
                      std::uint64_t seed, const GameLimits& limits, const ReportConfig& cfg) {
  GameState game = start_game(std::move(scene), goal_type, seed, limits);
  Rng rng(mix(seed, 0x706c6179ULL));
  play_game(game, hider, seeker, rng);
  return report_from_game(game, hider.name(), seeker.name(), cfg);
}

namespace {

void apply_script(GameState& game, std::span<const std::string> actions) {
  for (const std::string& text : actions) {
    if (game.finished) break;
    play_action(game, parse_action(text));
  }
}

}  // namespace

MatchReport run_scripted(std::shared_ptr<const Scene> scene, GoalType goal_type,
                         std::span<const std::string> actions, std::uint64_t seed, const GameLimits& limits,
                         const ReportConfig& cfg) {
  GameState game = start_game(std::move(scene), goal_type, seed, limits);
  apply_script(game, actions);
  return report_from_game(game, "scripted", "scripted", cfg);
}

MatchReport replay_report(std::shared_ptr<const Scene> scene, const MatchReport& report,
                          const ReportConfig& cfg) {
  GameState game = report.seek_only
                       ? start_seeking(std::move(scene), report.goal_type, report.start_hidden.value(),
                                       report.start_open, report.seed, report.limits)
                       : start_game(std::move(scene), report.goal_type, report.seed, report.limits);
  std::vector<std::string> actions;
  for (const ReportStep& s : report.steps) actions.push_back(s.action);
  apply_script(game, actions);
  return report_from_game(game, report.hider, report.seeker, cfg);
}

namespace {

constexpr std::string_view kReportFormat = "cache-report";
constexpr int kReportVersion = 1;

json hidden_json(const std::optional<HiddenRecord>& h) {
  if (!h) return nullptr;
  return json{{"x", h->cell.x},
              {"z", h->cell.z},
              {"modality", std::string(to_string(h->modality))},
              {"container", h->container ? json(*h->container) : json(nullptr)}};
}

std::optional<HiddenRecord> hidden_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  HiddenRecord h;
  h.cell = {j.at("x").get<int>(), j.at("z").get<int>()};
  const auto m = modality_from_string(j.at("modality").get<std::string>());
  if (!m) throw std::invalid_argument("unknown modality");
  h.modality = *m;
  if (!j.at("container").is_null()) h.container = j.at("container").get<std::size_t>();
  return h;
}

// Maps a byte offset to 1-based line and column.
std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string serialize_report(const MatchReport& r) {
  json top;
  top["format"] = kReportFormat;
  top["version"] = kReportVersion;
  top["scene"] = r.scene_id;
  top["goal"] = std::string(to_string(r.goal_type));
  top["seed"] = r.seed;
  top["hider"] = r.hider;
  top["seeker"] = r.seeker;
  top["limits"] = {{"em", r.limits.em}, {"ps", r.limits.ps_tries}, {"oh", r.limits.oh},
                   {"om", r.limits.om}, {"s", r.limits.s}};
  top["seek_only"] = r.seek_only;
  top["start_hidden"] = hidden_json(r.start_hidden);
  top["start_open"] = r.start_open;
  top["outcome"] = format_outcome(r.outcome);
  top["hidden"] = hidden_json(r.hidden);
  top["found"] = r.found;
  top["seeker_steps"] = r.seeker_steps;
  top["percentile"] = r.percentile ? json(*r.percentile) : json(nullptr);
  top["exploration"] = r.exploration ? json{{"coverage", r.exploration->coverage},
                                            {"coverage_plus", r.exploration->coverage_plus},
                                            {"open_pct", r.exploration->open_pct}}
                                     : json(nullptr);
  top["hiding"] = r.hiding ? json{{"visible_from_pct", r.hiding->visible_from_pct},
                                  {"bfs_steps_pct", r.hiding->bfs_steps_pct},
                                  {"bfs_found", r.hiding->bfs_found},
                                  {"bfs_steps", r.hiding->bfs_steps}}
                           : json(nullptr);
  json returns;
  for (int s = 0; s < kStageCount; ++s) {
    returns[std::string(to_string(static_cast<Stage>(s)))] = r.returns[static_cast<std::size_t>(s)];
  }
  top["returns"] = returns;

  // One member per line, one step per line.
  std::string out = "{\n";
  for (auto it = top.begin(); it != top.end(); ++it) {
    out += "  " + json(it.key()).dump() + ": " + it.value().dump() + ",\n";
  }
  out += "  \"steps\": [";
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    const ReportStep& s = r.steps[k];
    out += k ? ",\n    " : "\n    ";
    out += json::array({std::string(to_string(s.stage)), s.action, s.success, s.reward}).dump();
  }
  out += r.steps.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

MatchReport parse_report(std::string_view text) {
  json top;
  try {
    top = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(line, col, "malformed report (byte " + std::to_string(e.byte) + ")");
  }
  try {
    if (!top.is_object() || top.value("format", std::string()) != kReportFormat) {
      throw ParseError(1, 1, "missing 'cache-report' format tag");
    }
    const int version = top.at("version").get<int>();
    if (version != kReportVersion) {
      throw VersionError("report format version " + std::to_string(version) + " is not supported");
    }
    MatchReport r;
    r.scene_id = top.at("scene").get<std::string>();
    const auto goal = goal_type_from_string(top.at("goal").get<std::string>());
    if (!goal) throw std::invalid_argument("unknown goal type");
    r.goal_type = *goal;
    r.seed = top.at("seed").get<std::uint64_t>();
    r.hider = top.at("hider").get<std::string>();
    r.seeker = top.at("seeker").get<std::string>();
    const json& l = top.at("limits");
    r.limits = {l.at("em").get<int>(), l.at("ps").get<int>(), l.at("oh").get<int>(), l.at("om").get<int>(),
                l.at("s").get<int>()};
    r.seek_only = top.at("seek_only").get<bool>();
    r.start_hidden = hidden_from(top.at("start_hidden"));
    r.start_open = top.at("start_open").get<std::vector<bool>>();
    const std::string outcome = top.at("outcome").get<std::string>();
    if (outcome != "fail") {
      int v[4];
      char comma;
      std::istringstream in(outcome);
      in >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3];
      if (!in) throw std::invalid_argument("bad outcome");
      r.outcome = HideOutcome::placed(v[0] == 1, static_cast<Modality>(v[1]), v[2], v[3]);
      if (format_outcome(r.outcome) != outcome) throw std::invalid_argument("bad outcome");
    }
    r.hidden = hidden_from(top.at("hidden"));
    r.found = top.at("found").get<bool>();
    r.seeker_steps = top.at("seeker_steps").get<int>();
    if (!top.at("percentile").is_null()) r.percentile = top.at("percentile").get<double>();
    if (const json& e = top.at("exploration"); !e.is_null()) {
      r.exploration = ExplorationMetrics{e.at("coverage").get<double>(), e.at("coverage_plus").get<double>(),
                                         e.at("open_pct").get<double>()};
    }
    if (const json& h = top.at("hiding"); !h.is_null()) {
      r.hiding = HidingMetrics{h.at("visible_from_pct").get<double>(), h.at("bfs_steps_pct").get<double>(),
                               h.at("bfs_found").get<bool>(), h.at("bfs_steps").get<int>()};
    }
    for (int s = 0; s < kStageCount; ++s) {
      r.returns[static_cast<std::size_t>(s)] =
          top.at("returns").at(std::string(to_string(static_cast<Stage>(s)))).get<double>();
    }
    for (const json& s : top.at("steps")) {
      const auto stage = stage_from_string(s.at(0).get<std::string>());
      if (!stage) throw std::invalid_argument("unknown stage");
      r.steps.push_back({*stage, s.at(1).get<std::string>(), s.at(2).get<bool>(), s.at(3).get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(1, 1, std::string("invalid report: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(1, 1, std::string("invalid report: ") + e.what());
  }
}

// ---------------------------------------------------------------- evaluation

Interval wilson_interval(int successes, int trials, double z) {
  if (trials <= 0) throw PreconditionError("wilson_interval: no trials");
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

Interval t_interval(std::span<const double> values, double confidence) {
  const std::size_t n = values.size();
  if (n == 0) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  if (n < 2) return {mean, mean};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  const double q = boost::math::quantile(dist, 0.5 + confidence / 2.0);
  const double half = q * sd / std::sqrt(static_cast<double>(n));
  return {mean - half, mean + half};
}

std::vector<EvalRow> evaluate(const std::vector<SpotSet>& sets, const SceneIndex& scenes,
                              const PolicyFactory& seeker, int trials, std::uint64_t seed,
                              const GameLimits& limits) {
  if (trials <= 0) throw PreconditionError("evaluate: trials must be positive");
  if (sets.empty()) throw PreconditionError("evaluate: no spot sets");
  std::vector<EvalRow> rows;
  for (const SpotSet& set : sets) {
    if (set.spots.empty()) throw PreconditionError("evaluate: spot set '" + set.label + "' is empty");
    // Games keyed by spot identity, summed in a canonical order.
    std::vector<std::pair<std::string, int>> games;
    for (const HidingSpot& spot : set.spots) {
      const auto it = scenes.find(spot.scene_id);
      if (it == scenes.end()) throw PreconditionError("evaluate: unknown scene '" + spot.scene_id + "'");
      const std::string key = spot.scene_id + "|" + std::string(to_string(spot.goal_type)) + "|" +
                              std::to_string(spot.cell.x) + "|" + std::to_string(spot.cell.z) + "|" +
                              std::string(to_string(spot.modality)) + "|" +
                              (spot.container ? std::to_string(*spot.container) : "-");
      const HiddenRecord hidden{spot.cell, spot.modality, spot.container};
      const std::vector<bool> closed(it->second->objects().size(), false);
      for (int t = 0; t < trials; ++t) {
        const std::uint64_t game_seed = mix(mix(seed, fnv1a(key)), static_cast<std::uint64_t>(t));
        GameState game = start_seeking(it->second, spot.goal_type, hidden, closed, game_seed, limits);
        Rng rng(game_seed);
        auto policy = seeker();
        play_seeking(game, *policy, rng);
        const GameOutcome o = outcome_of_game(game);
        games.emplace_back(key + "|" + std::to_string(t), o.found ? o.seeker_steps : -1 - o.seeker_steps);
      }
    }
    std::sort(games.begin(), games.end());
    EvalRow row;
    row.label = set.label;
    std::vector<double> steps;
    for (const auto& [key, v] : games) {
      ++row.games;
      if (v >= 0) ++row.found;
      steps.push_back(v >= 0 ? v : -1 - v);
    }
    row.find_rate = static_cast<double>(row.found) / row.games;
    row.find_ci = wilson_interval(row.found, row.games);
    double total = 0.0;
    for (double s : steps) total += s;
    row.mean_steps = total / static_cast<double>(steps.size());
    row.steps_ci = t_interval(steps);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------- seriation

int seriation_positions(int reachable_positions) {
  return std::min(20, (15 * reachable_positions + 50) / 100);
}

std::vector<SeriationExample> seriation_dataset(const std::vector<std::shared_ptr<const Scene>>& scenes,
                                                Rng& rng) {
  std::vector<SeriationExample> out;
  for (const auto& scene : scenes) {
    const ObjectStates states = ObjectStates::initial(*scene);
    std::vector<Cell> cells = reachable_cells(*scene);
    const std::size_t n = static_cast<std::size_t>(seriation_positions(static_cast<int>(cells.size())));
    rng.shuffle(cells);
    cells.resize(std::min(n, cells.size()));
    for (const Cell& c : cells) {
      Pose p{c.x, c.z, static_cast<Rotation>(rng.below(4)), true};
      const bool right = rng.below(2) == 1;
      std::vector<Pose> poses{p};
      for (int k = 0; k < 7; ++k) {
        p.rotation = right ? rotate_right(p.rotation) : rotate_left(p.rotation);
        poses.push_back(p);
      }
      std::vector<int> counts;
      for (const Pose& q : poses) counts.push_back(free_space(*scene, states, q));
      for (std::size_t t = 4; t < poses.size(); ++t) {
        SeriationExample e;
        e.scene_id = scene->id();
        e.poses.assign(poses.begin(), poses.begin() + static_cast<std::ptrdiff_t>(t + 1));
        e.counts.assign(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(t + 1));
        e.label = counts[t] > counts[t - 1];
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- files

namespace {

constexpr std::string_view kSpotsMagic = "cache-spots";
constexpr int kSpotsVersion = 1;

}  // namespace

std::string serialize_spots(const std::vector<HidingSpot>& spots) {
  std::string out = std::string(kSpotsMagic) + " " + std::to_string(kSpotsVersion) + "\n";
  for (const HidingSpot& s : spots) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, s.visible_from);
    out += s.scene_id + " " + std::string(to_string(s.goal_type)) + " " + std::to_string(s.cell.x) + " " +
           std::to_string(s.cell.z) + " " + std::string(to_string(s.modality)) + " " +
           (s.container ? std::to_string(*s.container) : "-") + " " + std::string(buf, res.ptr) + " " +
           (s.difficulty ? std::string(to_string(*s.difficulty)) : "-") + "\n";
  }
  return out;
}

std::vector<HidingSpot> parse_spots(std::string_view text) {
  std::vector<HidingSpot> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    const bool terminated = end != std::string_view::npos;
    if (!terminated) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    // Split into fields, remembering columns.
    std::vector<std::pair<std::string_view, std::size_t>> fields;
    for (std::size_t k = 0; k < line.size();) {
      if (line[k] == ' ') {
        ++k;
        continue;
      }
      const std::size_t e = std::min(line.find(' ', k), line.size());
      fields.emplace_back(line.substr(k, e - k), k + 1);
      k = e;
    }
    if (!header) {
      if (fields.size() != 2 || fields[0].first != kSpotsMagic) {
        throw ParseError(line_no, 1, "missing 'cache-spots' header");
      }
      if (fields[1].first != std::to_string(kSpotsVersion)) {
        throw VersionError("spot format version " + std::string(fields[1].first) + " is not supported");
      }
      header = true;
      continue;
    }
    if (fields.empty()) continue;
    if (!terminated) throw ParseError(line_no, line.size() + 1, "truncated line");
    if (fields.size() != 8) {
      const std::size_t col = fields.size() > 8 ? fields[8].second : line.size() + 1;
      throw ParseError(line_no, col, "expected 8 fields, found " + std::to_string(fields.size()));
    }
    HidingSpot s;
    auto fail = [&](std::size_t f, const std::string& what) {
      throw ParseError(line_no, fields[f].second, what + " '" + std::string(fields[f].first) + "'");
    };
    auto int_field = [&](std::size_t f) {
      long long v = 0;
      const auto [p, ec] = std::from_chars(fields[f].first.data(), fields[f].first.data() + fields[f].first.size(), v);
      if (ec != std::errc() || p != fields[f].first.data() + fields[f].first.size()) fail(f, "bad integer");
      return v;
    };
    s.scene_id = std::string(fields[0].first);
    const auto goal = goal_type_from_string(fields[1].first);
    if (!goal) fail(1, "unknown goal type");
    s.goal_type = *goal;
    s.cell = {static_cast<int>(int_field(2)), static_cast<int>(int_field(3))};
    const auto m = modality_from_string(fields[4].first);
    if (!m) fail(4, "unknown modality");
    s.modality = *m;
    if (fields[5].first != "-") s.container = static_cast<std::size_t>(int_field(5));
    {
      const auto sv = fields[6].first;
      const auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), s.visible_from);
      if (ec != std::errc() || p != sv.data() + sv.size()) fail(6, "bad number");
    }
    if (fields[7].first != "-") {
      const auto d = difficulty_from_string(fields[7].first);
      if (!d) fail(7, "unknown difficulty");
      s.difficulty = *d;
    }
    out.push_back(std::move(s));
  }
  if (!header) throw ParseError(1, 1, "missing 'cache-spots' header");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("cannot write '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot rename '" + tmp + "' to '" + path + "'");
}

// ---------------------------------------------------------------- generator

namespace {

int uniform_int(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::size_t>(hi - lo + 1))); }

// Every walkable cell reachable from start.
bool connected(const SceneDescription& d, const std::vector<bool>& blocked) {
  auto free = [&](int x, int z) {
    const std::size_t k = static_cast<std::size_t>(z * d.width + x);
    return d.terrain[k] == Terrain::kFloor && !blocked[k];
  };
  std::vector<bool> seen(d.terrain.size(), false);
  std::vector<Cell> stack{d.start.cell()};
  seen[static_cast<std::size_t>(d.start.z * d.width + d.start.x)] = true;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    ++reached;
    for (const Cell dlt : {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}}) {
      const int x = c.x + dlt.x, z = c.z + dlt.z;
      if (x < 0 || z < 0 || x >= d.width || z >= d.height || !free(x, z)) continue;
      const std::size_t k = static_cast<std::size_t>(z * d.width + x);
      if (seen[k]) continue;
      seen[k] = true;
      stack.push_back({x, z});
    }
  }
  std::size_t total = 0;
  for (int z = 0; z < d.height; ++z) {
    for (int x = 0; x < d.width; ++x) total += free(x, z) ? 1 : 0;
  }
  return reached == total;
}

}  // namespace

Scene generate_scene(const std::string& id, Rng& rng, const GeneratorConfig& cfg) {
  SceneDescription d;
  d.id = id;
  d.width = uniform_int(rng, cfg.min_size, cfg.max_size);
  d.height = uniform_int(rng, cfg.min_size, cfg.max_size);
  d.terrain.assign(static_cast<std::size_t>(d.width * d.height), Terrain::kFloor);
  for (int z = 0; z < d.height; ++z) {
    for (int x = 0; x < d.width; ++x) {
      if (x == 0 || z == 0 || x == d.width - 1 || z == d.height - 1) {
        d.terrain[static_cast<std::size_t>(z * d.width + x)] = Terrain::kWall;
      }
    }
  }
  auto random_interior = [&] {
    return Cell{uniform_int(rng, 1, d.width - 2), uniform_int(rng, 1, d.height - 2)};
  };
  const Cell start = random_interior();
  d.start = {start.x, start.z, static_cast<Rotation>(rng.below(4)), true};
  std::vector<bool> blocked(d.terrain.size(), false);
  auto idx = [&](Cell c) { return static_cast<std::size_t>(c.z * d.width + c.x); };

  // Fixed furniture.
  const int furniture = uniform_int(rng, 0, 3);
  for (int k = 0, attempts = 0; k < furniture && attempts < 50; ++attempts) {
    const Cell c = random_interior();
    if (c == start || d.terrain[idx(c)] != Terrain::kFloor) continue;
    const Terrain t = rng.bernoulli(0.5) ? Terrain::kFurnitureLow : Terrain::kFurnitureHigh;
    d.terrain[idx(c)] = t;
    if (!connected(d, blocked)) {
      d.terrain[idx(c)] = Terrain::kFloor;
      continue;
    }
    ++k;
  }

  auto place = [&](WorldObject o) {
    for (int attempts = 0; attempts < 50; ++attempts) {
      const Cell c = random_interior();
      if (c == start || d.terrain[idx(c)] != Terrain::kFloor || blocked[idx(c)]) continue;
      blocked[idx(c)] = true;
      if (!connected(d, blocked)) {
        blocked[idx(c)] = false;
        continue;
      }
      o.cell = c;
      d.objects.push_back(std::move(o));
      return;
    }
  };
  const int receptacles = uniform_int(rng, cfg.min_receptacles, cfg.max_receptacles);
  for (int k = 0; k < receptacles; ++k) {
    WorldObject o;
    o.id = "receptacle" + std::to_string(k);
    o.kind = ObjectKind::kReceptacle;
    o.height = rng.bernoulli(0.5) ? Height::kHigh : Height::kLow;
    if (rng.bernoulli(0.7)) {
      o.openable = true;
      o.opaque_when_closed = rng.bernoulli(0.8);
      o.slots.insert(Modality::kContainedIn);
      if (rng.bernoulli(0.5)) o.slots.insert(Modality::kOnTop);
      o.capacity = static_cast<SizeClass>(uniform_int(rng, 1, 3));
    } else {
      o.openable = false;
      o.slots.insert(Modality::kOnTop);
    }
    place(std::move(o));
  }
  const int occluders = uniform_int(rng, cfg.min_occluders, cfg.max_occluders);
  for (int k = 0; k < occluders; ++k) {
    WorldObject o;
    o.id = "occluder" + std::to_string(k);
    o.kind = ObjectKind::kOccluder;
    o.height = rng.bernoulli(0.5) ? Height::kHigh : Height::kLow;
    o.slots.insert(Modality::kBehind);
    if (rng.bernoulli(0.5)) o.slots.insert(Modality::kOnTop);
    place(std::move(o));
  }
  return Scene::create(std::move(d));
}

}  // namespace gridcache
