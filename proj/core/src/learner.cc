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

#include "gridcache/learner.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "gridcache/error.h"

namespace gridcache {

namespace {

constexpr int kWindowBlock = kWindowCells * kWindowFeatureFlags;

int stage_limit(const GameLimits& l, Stage s) {
  switch (s) {
    case Stage::kEM: return l.em;
    case Stage::kPS: return l.ps_tries;
    case Stage::kOH: return l.oh;
    case Stage::kOM: return l.om;
    case Stage::kS: return l.s;
  }
  return 0;
}

}  // namespace

void set_target_features(Features& x, const Target& target) {
  const std::size_t o = kTargetFeatureOffset;
  for (int m = 0; m < 3; ++m) x[o + static_cast<std::size_t>(m)] = static_cast<int>(target.modality) == m ? 1.0 : 0.0;
  x[o + 3] = target.i / 7.0;
  x[o + 4] = target.j / 7.0;
}

Features featurize(const ViewWindow& window, const GameState& state, std::optional<Target> target) {
  const Scene& scene = *state.scene;
  Features x(kFeatureCount, 0.0);
  for (std::size_t k = 0; k < window.cells.size(); ++k) {
    const ViewCell& vc = window.cells[k];
    if (!vc.in_bounds || !vc.visible) continue;
    double* f = &x[k * kWindowFeatureFlags];
    f[0] = 1.0;
    const bool walk = scene.walkable(vc.world);
    f[1] = walk ? 1.0 : 0.0;
    f[2] = walk ? 0.0 : 1.0;
    for (std::size_t idx : scene.objects_at(vc.world)) {
      if (scene.objects()[idx].openable) {
        f[3] = 1.0;
        if (state.object_states.is_open(idx)) f[4] = 1.0;
      }
    }
    for (const Occupant& occ : vc.occupants) {
      if (occ.kind == ObjectKind::kGoal && occ.visible) f[5] = 1.0;
    }
  }
  std::size_t o = kWindowBlock;
  x[o++] = window.pose.standing ? 1.0 : 0.0;
  x[o + static_cast<std::size_t>(state.stage)] = 1.0;
  o += kStageCount;
  x[o++] = state.held ? 1.0 : 0.0;
  const int limit = stage_limit(state.limits, state.stage);
  x[o++] = static_cast<double>(state.t()) / static_cast<double>(limit > 0 ? limit : 500);
  if (!state.history.empty()) {
    const StepRecord& last = state.history.back();
    x[o + static_cast<std::size_t>(last.action.kind)] = 1.0;
    x[o + kActionKindCount] = last.success ? 1.0 : 0.0;
  }
  o += kActionKindCount + 1;
  x[o++] = object_visible(scene, state.object_states, window.pose, kGoalObjectId, kInteractRange) ? 1.0 : 0.0;
  if (state.held) {
    x[o] = state.held->i / 7.0;
    x[o + 1] = state.held->j / 7.0;
    x[o + 2] = state.held->height == Height::kHigh ? 1.0 : 0.0;
  }
  o += 3;
  const std::optional<Target> t = target ? target : state.om_target;
  if (t) set_target_features(x, *t);
  o += 5;
  x[o] = 1.0;
  return x;
}

Features featurize(const GameState& state) {
  return featurize(view_window(*state.scene, state.object_states, state.acting_pose()), state);
}

const std::vector<Action>& action_space(Stage stage) {
  static const std::array<std::vector<Action>, kStageCount> spaces = [] {
    using K = ActionKind;
    auto open_all = [](std::vector<Action>& v) {
      for (int i = 1; i <= kWindowSize; ++i) {
        for (int j = 1; j <= kWindowSize; ++j) v.push_back(Action::open_at(i, j));
      }
    };
    std::array<std::vector<Action>, kStageCount> s;
    auto& em = s[static_cast<std::size_t>(Stage::kEM)];
    for (K k : {K::kMoveAhead, K::kMoveLeft, K::kMoveRight, K::kRotateLeft, K::kRotateRight,
                K::kStand, K::kCrouch, K::kCloseObjects}) {
      em.push_back(Action::simple(k));
    }
    open_all(em);
    auto& seek = s[static_cast<std::size_t>(Stage::kS)];
    seek = em;
    seek.push_back(Action::simple(K::kClaimVisible));
    auto& oh = s[static_cast<std::size_t>(Stage::kOH)];
    for (K k : {K::kStand, K::kCrouch, K::kCloseObjects, K::kReadyForSeeker}) oh.push_back(Action::simple(k));
    open_all(oh);
    for (int m = 0; m < 3; ++m) {
      for (int i = 1; i <= kWindowSize; ++i) {
        for (int j = 1; j <= kWindowSize; ++j) oh.push_back(Action::place_at(static_cast<Modality>(m), i, j));
      }
    }
    auto& om = s[static_cast<std::size_t>(Stage::kOM)];
    for (K k : {K::kMoveHandAhead, K::kMoveHandLeft, K::kMoveHandRight, K::kMoveHandBack,
                K::kMoveHandUp, K::kMoveHandDown, K::kDropObject}) {
      om.push_back(Action::simple(k));
    }
    open_all(om);
    return s;
  }();
  return spaces[static_cast<std::size_t>(stage)];
}

std::optional<std::size_t> action_index(Stage stage, const Action& action) {
  const auto& space = action_space(stage);
  for (std::size_t k = 0; k < space.size(); ++k) {
    if (space[k] == action) return k;
  }
  return std::nullopt;
}

std::vector<double> StageHead::logits(const Features& x) const {
  std::vector<double> out(static_cast<std::size_t>(actions), 0.0);
  for (std::size_t a = 0; a < out.size(); ++a) {
    const double* row = &w[a * kFeatureCount];
    double s = 0.0;
    for (std::size_t f = 0; f < x.size(); ++f) s += row[f] * x[f];
    out[a] = s;
  }
  return out;
}

double StageHead::value(const Features& x) const {
  double s = 0.0;
  for (std::size_t f = 0; f < x.size(); ++f) s += u[f] * x[f];
  return s;
}

LinearPolicy LinearPolicy::zeros() {
  LinearPolicy p;
  for (int s = 0; s < kStageCount; ++s) {
    StageHead& h = p.heads[static_cast<std::size_t>(s)];
    h.actions = static_cast<int>(action_space(static_cast<Stage>(s)).size());
    h.w.assign(static_cast<std::size_t>(h.actions) * kFeatureCount, 0.0);
    h.u.assign(kFeatureCount, 0.0);
  }
  return p;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string serialize_policy(const LinearPolicy& policy) {
  std::string out = "cache-policy 1\nfeatures " + std::to_string(kFeatureCount) + "\n";
  for (int s = 0; s < kStageCount; ++s) {
    const StageHead& h = policy.heads[static_cast<std::size_t>(s)];
    out += "head " + std::string(to_string(static_cast<Stage>(s))) + " " + std::to_string(h.actions) + "\n";
    for (const auto* vec : {&h.w, &h.u}) {
      for (std::size_t k = 0; k < vec->size(); ++k) {
        if (k) out += ' ';
        append_double(out, (*vec)[k]);
      }
      out += '\n';
    }
  }
  return out;
}

LinearPolicy parse_policy(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) {
      throw ParseError(number, 0, std::string("unexpected end of input, expected ") + what);
    }
    ++number;
    return std::istringstream(line);
  };
  {
    auto hdr = next_line("header");
    std::string magic;
    int version = 0;
    hdr >> magic >> version;
    if (magic != "cache-policy") throw ParseError(number, 1, "missing 'cache-policy' header");
    if (version != 1) throw VersionError("policy format version " + std::to_string(version) + " is not supported");
  }
  {
    auto f = next_line("features");
    std::string key;
    int n = 0;
    f >> key >> n;
    if (key != "features" || n != kFeatureCount) {
      throw ParseError(number, 1, "expected 'features " + std::to_string(kFeatureCount) + "'");
    }
  }
  LinearPolicy p = LinearPolicy::zeros();
  for (int s = 0; s < kStageCount; ++s) {
    StageHead& h = p.heads[static_cast<std::size_t>(s)];
    auto hl = next_line("head");
    std::string key, name;
    int actions = -1;
    hl >> key >> name >> actions;
    if (key != "head" || name != to_string(static_cast<Stage>(s)) || actions != h.actions) {
      throw ParseError(number, 1, "expected 'head " + std::string(to_string(static_cast<Stage>(s))) + " " +
                                      std::to_string(h.actions) + "'");
    }
    for (auto* vec : {&h.w, &h.u}) {
      next_line("weights");
      std::size_t pos = 0;
      for (std::size_t k = 0; k < vec->size(); ++k) {
        while (pos < line.size() && line[pos] == ' ') ++pos;
        std::size_t end = line.find(' ', pos);
        if (end == std::string::npos) end = line.size();
        double v = 0.0;
        const auto res = std::from_chars(line.data() + pos, line.data() + end, v);
        if (res.ec != std::errc() || res.ptr != line.data() + end) {
          throw ParseError(number, pos + 1, "expected " + std::to_string(vec->size()) + " numbers");
        }
        (*vec)[k] = v;
        pos = end;
      }
      if (line.find_first_not_of(' ', pos) != std::string::npos) {
        throw ParseError(number, pos + 1, "too many numbers");
      }
    }
  }
  return p;
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                        double tau, double bootstrap) {
  if (rewards.size() != values.size()) throw PreconditionError("gae: length mismatch");
  std::vector<double> adv(rewards.size());
  double running = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    const double next = k + 1 < values.size() ? values[k + 1] : bootstrap;
    const double delta = rewards[k] + gamma * next - values[k];
    running = delta + gamma * tau * running;
    adv[k] = running;
  }
  return adv;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma, double bootstrap) {
  std::vector<double> out(rewards.size());
  double running = bootstrap;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    running = rewards[k] + gamma * running;
    out[k] = running;
  }
  return out;
}

A3cLoss a3c_loss(const std::vector<std::vector<double>>& logits, std::span<const std::size_t> actions,
                 std::span<const double> advantages, std::span<const double> returns,
                 std::span<const double> values, double beta) {
  const std::size_t n = logits.size();
  if (actions.size() != n || advantages.size() != n || returns.size() != n || values.size() != n) {
    throw PreconditionError("a3c_loss: length mismatch");
  }
  A3cLoss out;
  out.dlogits.resize(n);
  out.dvalues.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::vector<double> pi = softmax(logits[t]);
    double h = 0.0;
    for (double p : pi) {
      if (p > 0.0) h -= p * std::log(p);
    }
    const std::size_t a = actions[t];
    out.policy -= std::log(pi[a]) * advantages[t];
    out.entropy += h;
    const double diff = values[t] - returns[t];
    out.value += 0.5 * diff * diff;
    out.dvalues[t] = diff;
    std::vector<double>& g = out.dlogits[t];
    g.resize(pi.size());
    for (std::size_t k = 0; k < pi.size(); ++k) {
      const double logp = pi[k] > 0.0 ? std::log(pi[k]) : 0.0;
      g[k] = advantages[t] * pi[k] + beta * pi[k] * (logp + h);
    }
    g[a] -= advantages[t];
  }
  out.total = out.policy + out.value - beta * out.entropy;
  return out;
}

ImitationLoss imitation_loss(std::span<const double> logits, std::size_t expert) {
  ImitationLoss out;
  out.dlogits = softmax(logits);
  out.loss = -std::log(out.dlogits.at(expert));
  out.dlogits[expert] -= 1.0;
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw PreconditionError("adam_step: shape mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.v_max.assign(params.size(), 0.0);
    state.t = 0;
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g * g;
    double second = state.v[k];
    if (cfg.amsgrad) {
      state.v_max[k] = std::max(state.v_max[k], state.v[k]);
      second = state.v_max[k];
    }
    const double denom = std::sqrt(second) / std::sqrt(bc2) + cfg.eps;
    params[k] -= cfg.lr / bc1 * state.m[k] / denom;
  }
}

Relabeled hindsight_relabel(const ExplorationTrace& om_trace, const Target& original,
                            const RewardConfig& cfg) {
  if (om_trace.steps.empty() || om_trace.steps.back().action.kind != ActionKind::kDropObject) {
    throw PreconditionError("hindsight_relabel: episode did not end with a drop");
  }
  const PlacementResolution& res = om_trace.steps.back().placement.value();
  if (res.success) throw PreconditionError("hindsight_relabel: episode succeeded");
  if (!res.landing.on_window()) throw PreconditionError("hindsight_relabel: off-window landing");
  (void)original;
  Relabeled out;
  Modality m = Modality::kOnTop;
  if (res.landed_modalities.contains(Modality::kContainedIn)) {
    m = Modality::kContainedIn;
  } else if (res.landed_modalities.contains(Modality::kBehind)) {
    m = Modality::kBehind;
  }
  out.target = {m, res.landing.row, res.landing.column};
  for (std::size_t t = 0; t < om_trace.steps.size(); ++t) {
    out.rewards.push_back(om_reward(om_trace, t, out.target, cfg));
  }
  return out;
}

void remember(HiderMemory& memory, const GameState& state) {
  if (state.stage != Stage::kEM) return;
  memory.map.write(*state.scene, state.object_states, state.hider_pose, state.em_t);
}

namespace {

void seed_evaluator(HideEvaluator& evaluator, const MetricMap& map) {
  for (const auto& [pose, rec] : map.records()) {
    if (evaluator.v_rows().count(pose)) continue;
    evaluator.mutable_p(pose);
    evaluator.mutable_v(pose).fill(heuristic_hide_value(map, pose));
  }
}

}  // namespace

Action plan_hide_action(HiderMemory& memory, HideEvaluator& evaluator, const GameState& state,
                        Rng& rng, const RolloutConfig& cfg) {
  const Pose& here = state.hider_pose;
  memory.belief = belief_scene(memory.map, state.em_start);
  if (!memory.belief || memory.map.empty()) {
    return Action::choose_hide_pose(0, 0, here.rotation, here.standing);
  }
  seed_evaluator(evaluator, memory.map);
  memory.plan = plan_hide_pose(memory.map, evaluator, *memory.belief, state.em_start, state.goal_type,
                               rng, cfg);
  const Pose& p = memory.plan->pose;
  return Action::choose_hide_pose(p.x - here.x, p.z - here.z, p.rotation, p.standing);
}

LearnedAgent::LearnedAgent(std::shared_ptr<const LinearPolicy> policy,
                           std::shared_ptr<HideEvaluator> evaluator, RolloutConfig ps_cfg, bool greedy,
                           bool record)
    : policy_(std::move(policy)),
      evaluator_(std::move(evaluator)),
      ps_cfg_(ps_cfg),
      greedy_(greedy),
      record_(record) {}

void LearnedAgent::begin(const GameState& state, Rng& /*rng*/) {
  samples_.clear();
  ps_attempts_ = 0;
  expert_.reset();
  if (state.stage == Stage::kS) {
    if (record_ && state.object_states.goal) expert_.emplace(*state.scene, state.object_states);
    return;
  }
  memory_ = HiderMemory{};
  remember(memory_, state);
  memory_.start_value = heuristic_hide_value(memory_.map, state.hider_pose);
}

Action LearnedAgent::act(const GameState& state, Rng& rng) {
  if (state.stage == Stage::kPS) {
    if (ps_attempts_++ == 0) return plan_hide_action(memory_, *evaluator_, state, rng, ps_cfg_);
    return Action::choose_hide_pose(0, 0, state.hider_pose.rotation, state.hider_pose.standing);
  }
  const Features x = featurize(state);
  const StageHead& head = policy_->head(state.stage);
  const std::vector<double> logits = head.logits(x);
  std::size_t a = 0;
  if (greedy_) {
    a = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  } else {
    a = rng.categorical(softmax(logits));
  }
  if (record_) {
    StepSample sample{state.stage, x, a, std::nullopt};
    if (state.stage == Stage::kS && expert_) {
      const auto c = state.object_states.goal->container;
      const VisibilityField::State fs{state.seeker_pose, !c || state.object_states.is_open(*c)};
      if (expert_->visible(fs)) {
        sample.expert = action_index(Stage::kS, Action::simple(ActionKind::kClaimVisible));
      } else if (auto best = expert_->best_action(fs)) {
        sample.expert = action_index(Stage::kS, *best);
      }
    }
    samples_.push_back(std::move(sample));
  }
  return action_space(state.stage)[a];
}

void LearnedAgent::observe(const GameState& state, const StepResult& /*result*/) {
  const StepRecord& last = state.history.back();
  if (last.stage != Stage::kEM) return;
  memory_.map.write(*state.scene, state.object_states, state.hider_pose, state.em_t);
  memory_.hide_values.push_back(heuristic_hide_value(memory_.map, state.hider_pose));
}

namespace {

struct HeadGrad {
  std::vector<double> w;
  std::vector<double> u;
};

struct HeadOptim {
  AdamState w;
  AdamState u;
};

struct Segment {
  std::vector<const Features*> x;
  std::vector<std::size_t> actions;
  std::vector<double> rewards;
  std::vector<std::optional<std::size_t>> expert;
  bool truncated = false;  // bootstrap from the value of the last state
};

struct UpdateStats {
  double loss = 0.0;
  double imitation = 0.0;
  int updates = 0;
};

void accumulate(HeadGrad& g, const Features& x, std::span<const double> dlogits, double dvalue) {
  for (std::size_t a = 0; a < dlogits.size(); ++a) {
    if (dlogits[a] == 0.0) continue;
    double* row = &g.w[a * kFeatureCount];
    for (std::size_t f = 0; f < x.size(); ++f) row[f] += dlogits[a] * x[f];
  }
  if (dvalue != 0.0) {
    for (std::size_t f = 0; f < x.size(); ++f) g.u[f] += dvalue * x[f];
  }
}

// n-step A3C (+ imitation) updates over one stage episode.
void update_head(StageHead& head, HeadOptim& optim, const Segment& seg, double gamma,
                 const LearnerConfig& cfg, UpdateStats& stats) {
  const std::size_t n = seg.x.size();
  const AdamConfig adam{cfg.lr};
  for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(cfg.n_step)) {
    const std::size_t end = std::min(n, begin + static_cast<std::size_t>(cfg.n_step));
    std::vector<std::vector<double>> logits;
    std::vector<double> values;
    for (std::size_t t = begin; t < end; ++t) {
      logits.push_back(head.logits(*seg.x[t]));
      values.push_back(head.value(*seg.x[t]));
    }
    double bootstrap = 0.0;
    if (end < n) {
      bootstrap = head.value(*seg.x[end]);
    } else if (seg.truncated) {
      bootstrap = values.back();
    }
    const std::span<const double> r(seg.rewards.data() + begin, end - begin);
    const std::vector<double> adv = gae(r, values, gamma, cfg.tau, bootstrap);
    const std::vector<double> ret = discounted_returns(r, gamma, bootstrap);
    const A3cLoss loss = a3c_loss(logits, std::span(seg.actions.data() + begin, end - begin), adv, ret,
                                  values, cfg.beta);
    HeadGrad g{std::vector<double>(head.w.size(), 0.0), std::vector<double>(head.u.size(), 0.0)};
    for (std::size_t t = begin; t < end; ++t) {
      std::vector<double> dl = loss.dlogits[t - begin];
      if (seg.expert[t]) {
        const ImitationLoss im = imitation_loss(logits[t - begin], *seg.expert[t]);
        stats.imitation += im.loss;
        for (std::size_t a = 0; a < dl.size(); ++a) dl[a] += cfg.imitation_weight * im.dlogits[a];
      }
      accumulate(g, *seg.x[t], dl, loss.dvalues[t - begin]);
    }
    adam_step(head.w, g.w, optim.w, adam);
    adam_step(head.u, g.u, optim.u, adam);
    stats.loss += loss.total;
    ++stats.updates;
  }
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

struct Learner {
  const LearnerConfig& cfg;
  LinearPolicy policy;
  HideEvaluator evaluator;
  std::array<HeadOptim, kStageCount> optim;
  std::map<Pose, AdamState> p_optim;
  std::map<std::pair<Pose, int>, AdamState> v_optim;
  std::array<int, 3> om_tries{};
  std::array<int, 3> om_successes{};

  double manipulation_p(Modality m) const {
    const std::size_t k = static_cast<std::size_t>(m);
    return (om_successes[k] + 1.0) / (om_tries[k] + 2.0);
  }
};

std::string run_episode(Learner& L, const Scene& scene_ref, const std::shared_ptr<const Scene>& scene,
                        int episode, std::uint64_t seed) {
  const LearnerConfig& cfg = L.cfg;
  Rng rng(seed);
  const GoalType goal = kAllGoalTypes[rng.below(kAllGoalTypes.size())];
  GameState game = start_game(scene, goal, rng.split(), cfg.limits);
  auto snapshot = std::make_shared<const LinearPolicy>(L.policy);
  auto evaluator = std::make_shared<HideEvaluator>(L.evaluator);
  LearnedAgent hider(snapshot, evaluator, cfg.ps_rollouts, false, true);
  LearnedAgent seeker(snapshot, evaluator, cfg.ps_rollouts, false, true);
  play_game(game, hider, seeker, rng);

  HiderMemory& mem = hider.memory();
  const StageTraces traces = stage_traces(game, mem.hide_values, mem.start_value);
  nlohmann::ordered_json log;
  log["episode"] = episode;
  log["scene"] = scene_ref.id();
  log["goal"] = std::string(to_string(goal));

  // Split hider samples by stage, in history order.
  std::vector<const LearnedAgent::StepSample*> em, oh, om;
  for (const auto& s : hider.samples()) {
    if (s.stage == Stage::kEM) em.push_back(&s);
    if (s.stage == Stage::kOH) oh.push_back(&s);
    if (s.stage == Stage::kOM) om.push_back(&s);
  }

  // E&M.
  {
    Segment seg;
    for (std::size_t t = 0; t < em.size(); ++t) {
      seg.x.push_back(&em[t]->x);
      seg.actions.push_back(em[t]->action);
      seg.rewards.push_back(em_reward(traces.em, t, cfg.rewards));
      seg.expert.push_back(std::nullopt);
    }
    seg.truncated = true;
    UpdateStats st;
    update_head(L.policy.head(Stage::kEM), L.optim[0], seg, cfg.gamma, cfg, st);
    const ExplorationMetrics m = exploration_metrics(traces.em, scene_ref);
    log["em"] = {{"coverage", m.coverage}, {"coverage_plus", m.coverage_plus}, {"open_pct", m.open_pct},
                 {"return", sum(seg.rewards)}, {"loss", st.loss}};
  }

  const GameOutcome outcome = outcome_of_game(game);
  std::optional<double> percentile;
  if (!outcome.hide.fail && mem.belief && game.hidden) {
    const Scene& belief = *mem.belief;
    GoalPlacement g{goal, game.hidden->cell, std::nullopt};
    if (!belief.in_bounds(g.cell)) {
      g = placement_for_outcome(belief, game.hider_pose, HideOutcome::failure(), goal);
    } else if (game.hidden->container) {
      for (std::size_t k : belief.objects_at(g.cell)) {
        if (belief.objects()[k].slots.contains(Modality::kContainedIn)) g.container = k;
      }
    }
    RolloutConfig pc = cfg.ps_rollouts;
    pc.rollouts = cfg.percentile_rollouts;
    pc.max_steps = cfg.limits.s > 0 ? cfg.limits.s : 500;
    const std::vector<int> lengths = mental_rollouts(belief, g, game.em_start, pc, rng);
    percentile = oh_percentile(outcome.seeker_steps, lengths);
  }

  // OH.
  {
    Segment seg;
    for (std::size_t t = 0; t < oh.size() && t < traces.oh.steps.size(); ++t) {
      const TraceStep& step = traces.oh.steps[t];
      double p = 0.5;
      if (step.action.kind == ActionKind::kPlaceAt) p = L.manipulation_p(static_cast<Modality>(step.action.m));
      seg.x.push_back(&oh[t]->x);
      seg.actions.push_back(oh[t]->action);
      seg.rewards.push_back(oh_reward(traces.oh, t, p, percentile, cfg.rewards));
      seg.expert.push_back(std::nullopt);
    }
    UpdateStats st;
    update_head(L.policy.head(Stage::kOH), L.optim[static_cast<std::size_t>(Stage::kOH)], seg, cfg.gamma_oh,
                cfg, st);
    log["oh"] = {{"outcome", format_outcome(outcome.hide)},
                 {"percentile", percentile ? *percentile : 0.0},
                 {"return", sum(seg.rewards)},
                 {"loss", st.loss}};
  }

  // OM, with hindsight copies of failed on-window drops.
  {
    UpdateStats st;
    std::size_t cursor = 0;
    int successes = 0;
    std::vector<Features> relabeled_x;
    double ret = 0.0;
    for (const OmEpisode& ep : traces.om) {
      Segment seg;
      const std::size_t n = ep.trace.steps.size();
      for (std::size_t t = 0; t < n && cursor + t < om.size(); ++t) {
        seg.x.push_back(&om[cursor + t]->x);
        seg.actions.push_back(om[cursor + t]->action);
        seg.rewards.push_back(om_reward(ep.trace, t, ep.target, cfg.rewards));
        seg.expert.push_back(std::nullopt);
      }
      ret += sum(seg.rewards);
      update_head(L.policy.head(Stage::kOM), L.optim[static_cast<std::size_t>(Stage::kOM)], seg, cfg.gamma, cfg,
                  st);
      const auto& last = ep.trace.steps.empty() ? std::optional<PlacementResolution>{}
                                                 : ep.trace.steps.back().placement;
      const std::size_t m = static_cast<std::size_t>(ep.target.modality);
      ++L.om_tries[m];
      if (last && last->success) {
        ++L.om_successes[m];
        ++successes;
      } else if (last && last->landing.on_window() && seg.x.size() == n) {
        const Relabeled rl = hindsight_relabel(ep.trace, ep.target, cfg.rewards);
        relabeled_x.clear();
        for (const Features* x : seg.x) {
          relabeled_x.push_back(*x);
          set_target_features(relabeled_x.back(), rl.target);
        }
        Segment hs = seg;
        for (std::size_t t = 0; t < n; ++t) hs.x[t] = &relabeled_x[t];
        hs.rewards = rl.rewards;
        update_head(L.policy.head(Stage::kOM), L.optim[static_cast<std::size_t>(Stage::kOM)], hs, cfg.gamma,
                    cfg, st);
      }
      cursor += n;
    }
    log["om"] = {{"episodes", traces.om.size()}, {"successes", successes}, {"return", ret}, {"loss", st.loss}};
  }

  // S, with shortest-path imitation.
  if (traces.s) {
    Segment seg;
    const auto& ss = seeker.samples();
    for (std::size_t t = 0; t < ss.size() && t < traces.s->steps.size(); ++t) {
      seg.x.push_back(&ss[t].x);
      seg.actions.push_back(ss[t].action);
      seg.rewards.push_back(s_reward(*traces.s, t, cfg.rewards));
      seg.expert.push_back(ss[t].expert);
    }
    seg.truncated = !outcome.found;
    UpdateStats st;
    update_head(L.policy.head(Stage::kS), L.optim[static_cast<std::size_t>(Stage::kS)], seg, cfg.gamma, cfg, st);
    log["s"] = {{"found", outcome.found},
                {"steps", outcome.seeker_steps},
                {"return", sum(seg.rewards)},
                {"loss", st.loss},
                {"imitation", st.imitation}};
  }

  // PS tables.
  if (mem.plan) {
    const Pose realized = game.history.empty() ? game.hider_pose : [&] {
      Pose p = game.em_start;
      for (const StepRecord& r : game.history) {
        if (r.stage == Stage::kEM || r.stage == Stage::kPS) p = r.pose_after;
      }
      return p;
    }();
    const PsLosses loss = ps_losses(L.evaluator, realized, outcome.hide.index(), mem.plan->estimate);
    const AdamConfig adam{cfg.lr_ps};
    OutcomeRow& prow = L.evaluator.mutable_p(realized);
    adam_step(prow, loss.grad_p, L.p_optim[realized], adam);
    for (const auto& [pose, e, g] : loss.grad_v) {
      double& v = L.evaluator.mutable_v(pose)[static_cast<std::size_t>(e)];
      const double grad[1] = {g};
      adam_step(std::span<double>(&v, 1), grad, L.v_optim[{pose, e}], adam);
    }
    log["ps"] = {{"xent", loss.xent}, {"ranking", loss.ranking}};
  }
  // Seed rows the planner added during the game.
  for (const auto& [pose, row] : evaluator->v_rows()) {
    if (!L.evaluator.v_rows().count(pose)) L.evaluator.mutable_v(pose) = row;
  }
  return log.dump();
}

void add_scaled_delta(std::vector<double>& shared, const std::vector<double>& local,
                      const std::vector<double>& start, double scale) {
  for (std::size_t k = 0; k < shared.size(); ++k) shared[k] += (local[k] - start[k]) * scale;
}

}  // namespace

TrainResult train(const LearnerConfig& config, const std::vector<std::shared_ptr<const Scene>>& scenes,
                  int episodes, std::uint64_t seed, const std::function<void(const std::string&)>& on_log) {
  if (scenes.empty()) throw PreconditionError("train: no scenes");
  TrainResult result;
  Rng master(seed);
  std::vector<std::uint64_t> seeds;
  for (int e = 0; e < episodes; ++e) seeds.push_back(master.split());

  if (config.workers <= 1) {
    Learner L{config, LinearPolicy::zeros(), {}, {}, {}, {}, {}, {}};
    for (int e = 0; e < episodes; ++e) {
      const auto& scene = scenes[static_cast<std::size_t>(e) % scenes.size()];
      std::string line = run_episode(L, *scene, scene, e, seeds[static_cast<std::size_t>(e)]);
      if (on_log) on_log(line);
      result.log.push_back(std::move(line));
    }
    result.policy = std::move(L.policy);
    result.evaluator = std::move(L.evaluator);
    return result;
  }

  // Workers own private learners; deltas are merged into the shared policy
  // scaled by 1/N, one merge at a time.
  LinearPolicy shared = LinearPolicy::zeros();
  HideEvaluator shared_eval;
  std::mutex mu;
  int next = 0;
  const int n = config.workers;
  std::vector<std::thread> threads;
  for (int w = 0; w < n; ++w) {
    threads.emplace_back([&] {
      Learner L{config, LinearPolicy::zeros(), {}, {}, {}, {}, {}, {}};
      while (true) {
        int e = 0;
        LinearPolicy start;
        {
          std::lock_guard lock(mu);
          if (next >= episodes) return;
          e = next++;
          start = shared;
          L.evaluator = shared_eval;
        }
        L.policy = start;
        const auto& scene = scenes[static_cast<std::size_t>(e) % scenes.size()];
        std::string line = run_episode(L, *scene, scene, e, seeds[static_cast<std::size_t>(e)]);
        std::lock_guard lock(mu);
        for (int s = 0; s < kStageCount; ++s) {
          const auto k = static_cast<std::size_t>(s);
          add_scaled_delta(shared.heads[k].w, L.policy.heads[k].w, start.heads[k].w, 1.0 / n);
          add_scaled_delta(shared.heads[k].u, L.policy.heads[k].u, start.heads[k].u, 1.0 / n);
        }
        for (const auto& [pose, row] : L.evaluator.p_rows()) shared_eval.mutable_p(pose) = row;
        for (const auto& [pose, row] : L.evaluator.v_rows()) shared_eval.mutable_v(pose) = row;
        if (on_log) on_log(line);
        result.log.push_back(std::move(line));
      }
    });
  }
  for (auto& t : threads) t.join();
  result.policy = std::move(shared);
  result.evaluator = std::move(shared_eval);
  return result;
}

}  // namespace gridcache
