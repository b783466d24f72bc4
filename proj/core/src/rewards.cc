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

#include "gridcache/rewards.h"

#include <algorithm>
#include <cmath>

#include "gridcache/error.h"
#include "gridcache/oracle.h"

namespace gridcache {

std::vector<Pose> extrapolate(const Scene& scene, const Pose& pose) {
  std::vector<Pose> out;
  const Cell ahead = pose.cell() + forward_vector(pose.rotation);
  const Cell right = right_vector(pose.rotation);
  for (const Cell& c : {ahead, ahead + right * -1, ahead + right}) {
    if (!scene.in_bounds(c)) continue;
    out.push_back({c.x, c.z, pose.rotation, pose.standing});
  }
  return out;
}

double ExplorationTrace::mean_unseen_value(std::size_t t) const {
  double num = start_hide_value;
  double den = 1.0;
  for (std::size_t s = 0; s < t && s < steps.size(); ++s) {
    if (!steps[s].unseen()) continue;
    num += steps[s].hide_value;
    den += 1.0;
  }
  return num / den;
}

ExplorationTrace make_trace(const Scene& scene, Stage stage, const Pose& start,
                            std::span<const StepRecord> records,
                            std::span<const double> hide_values, double start_hide_value) {
  ExplorationTrace trace;
  trace.stage = stage;
  trace.start = start;
  trace.start_hide_value = start_hide_value;

  std::set<Tuple3> visited_no_rotation{drop_rotation(start)};
  auto visit = [&](const Pose& p) {
    const bool fresh = trace.visited.insert(p).second;
    int added = 0;
    if (trace.extrapolated.insert(p).second) ++added;
    for (const Pose& e : extrapolate(scene, p)) {
      if (trace.extrapolated.insert(e).second) ++added;
    }
    return std::make_pair(fresh, added);
  };
  visit(start);

  for (std::size_t k = 0; k < records.size(); ++k) {
    const StepRecord& r = records[k];
    TraceStep step;
    step.action = r.action;
    step.success = r.success;
    step.pose_after = r.pose_after;
    step.claim_failure = r.claim_failure;
    step.placement = r.placement;
    if (k < hide_values.size()) step.hide_value = hide_values[k];
    for (std::size_t o : r.opened) {
      if (trace.opened.insert(o).second) step.new_opened = true;
    }
    const auto [fresh, added] = visit(r.pose_after);
    step.new_extrapolated = added;
    step.new_location = stage == Stage::kS
                            ? visited_no_rotation.insert(drop_rotation(r.pose_after)).second
                            : fresh;
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

StageTraces stage_traces(const GameState& game, std::span<const double> em_hide_values,
                         double em_start_value) {
  const Scene& scene = *game.scene;
  StageTraces out;
  std::vector<StepRecord> em;
  std::vector<StepRecord> oh;
  std::vector<StepRecord> s;
  Pose oh_start = game.em_start;
  std::optional<OmEpisode> current_om;
  std::vector<StepRecord> om_records;
  Pose om_pose;

  auto close_om = [&](bool timed_out) {
    current_om->trace = make_trace(scene, Stage::kOM, om_pose, om_records);
    current_om->trace.timed_out = timed_out;
    out.om.push_back(std::move(*current_om));
    current_om.reset();
    om_records.clear();
  };

  for (const StepRecord& r : game.history) {
    if (current_om && r.stage != Stage::kOM) {
      const bool dropped = !om_records.empty() &&
                           om_records.back().action.kind == ActionKind::kDropObject;
      close_om(!dropped);
    }
    switch (r.stage) {
      case Stage::kEM: em.push_back(r); oh_start = r.pose_after; break;
      case Stage::kPS: oh_start = r.pose_after; break;
      case Stage::kOH:
        oh.push_back(r);
        if (r.action.kind == ActionKind::kPlaceAt) {
          const std::size_t pos = static_cast<std::size_t>(&r - game.history.data());
          const bool spawned = pos + 1 < game.history.size() &&
                               game.history[pos + 1].stage == Stage::kOM;
          if (spawned) {
            current_om = OmEpisode{Target{static_cast<Modality>(r.action.m), r.action.i, r.action.j}, {}};
            om_pose = r.pose_after;
          }
        }
        break;
      case Stage::kOM: om_records.push_back(r); break;
      case Stage::kS: s.push_back(r); break;
    }
  }
  if (current_om) {
    const bool dropped =
        !om_records.empty() && om_records.back().action.kind == ActionKind::kDropObject;
    const bool finished = game.stage != Stage::kOM;
    close_om(finished && !dropped);
  }

  out.em = make_trace(scene, Stage::kEM, game.em_start, em, em_hide_values, em_start_value);
  out.oh = make_trace(scene, Stage::kOH, oh_start, oh);
  if (game.stage == Stage::kS) out.s = make_trace(scene, Stage::kS, game.em_start, s);
  return out;
}

double em_reward(const ExplorationTrace& trace, std::size_t t, const RewardConfig& cfg) {
  const TraceStep& a = trace.steps.at(t);
  double r = cfg.step;
  if (!a.success) {
    r += cfg.fail;
  } else {
    r += cfg.em_extrap_coef * static_cast<double>(a.new_extrapolated) / cfg.em_extrap_div;
    if (a.new_opened) r += cfg.em_open_bonus;
    if (a.new_opened || a.new_location) {
      const double gain = a.hide_value - trace.mean_unseen_value(t);
      r += cfg.em_hide_coef * std::min(1.0, std::max(0.0, gain)) * (a.unseen() ? 1.0 : 0.0);
    }
  }
  if (a.action.kind == ActionKind::kOpenAt) r = std::max(r, cfg.em_openat_floor);
  return r;
}

double oh_reward(const ExplorationTrace& trace, std::size_t t, double p,
                 std::optional<double> percentile, const RewardConfig& cfg) {
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("oh_reward: p must lie in [0, 1]");
  const TraceStep& a = trace.steps.at(t);
  bool placed_before = false;
  for (std::size_t s = 0; s < t; ++s) {
    const TraceStep& prev = trace.steps[s];
    if (prev.action.kind == ActionKind::kPlaceAt && prev.success) placed_before = true;
  }

  double r = cfg.step;
  if (a.action.kind == ActionKind::kReadyForSeeker) {
    if (!a.success) r += cfg.oh_ready_fail;
  } else if (a.success && a.action.kind == ActionKind::kOpenAt) {
    if (a.new_opened) r += cfg.oh_open_bonus;
  } else if (a.action.kind == ActionKind::kPlaceAt && placed_before) {
    r += cfg.oh_repeat_place;
  } else if (a.success && a.action.kind == ActionKind::kPlaceAt) {
    // min(q^-2, cap), compared on q so a decimal p at the cap edge lands on it
    const double q = std::max(p, cfg.oh_place_p_floor);
    const double boost = q <= 1.0 / std::sqrt(cfg.oh_place_cap) ? cfg.oh_place_cap : 1.0 / (q * q);
    r += cfg.oh_place_bonus;
    r += cfg.oh_place_half * boost / cfg.oh_place_div;
  } else if (!a.success) {
    r += cfg.oh_fail;
  }

  if (percentile) {
    bool any_place = false;
    std::optional<std::size_t> last;
    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
      const TraceStep& x = trace.steps[s];
      if (x.action.kind == ActionKind::kPlaceAt && x.success) any_place = true;
      if (x.success && x.action.kind != ActionKind::kReadyForSeeker) last = s;
    }
    if (any_place && last == t) r += cfg.oh_percentile_coef * *percentile;
  }
  return r;
}

double om_reward(const ExplorationTrace& trace, std::size_t t, const Target& target,
                 const RewardConfig& cfg) {
  const TraceStep& a = trace.steps.at(t);
  double r = cfg.step;
  if (!a.success) {
    r += cfg.om_fail;
  } else if (a.action.kind == ActionKind::kOpenAt) {
    if (a.new_opened) r += cfg.om_open_bonus;
  } else if (a.action.kind == ActionKind::kDropObject) {
    if (!a.placement || !a.placement->landing.on_window()) {
      r += cfg.om_offscreen;
    } else {
      const Landing& l = a.placement->landing;
      const ModalitySet& mods = a.placement->landed_modalities;
      const int distance = std::abs(target.i - l.row) + std::abs(target.j - l.column);
      r += std::pow(cfg.om_distance_base, distance);
      if (target.modality != Modality::kOnTop && mods.contains(target.modality)) {
        r += cfg.om_modality_bonus;
      }
      if (distance == 0 && mods.contains(target.modality)) r += cfg.om_exact_bonus;
    }
  } else if (trace.timed_out && t + 1 == trace.steps.size()) {
    r += cfg.om_timeout;
  }
  return r;
}

double s_reward(const ExplorationTrace& trace, std::size_t t, const RewardConfig& cfg) {
  const TraceStep& a = trace.steps.at(t);
  double r = cfg.step;
  if (!a.success) {
    if (a.action.kind == ActionKind::kClaimVisible) {
      if (a.claim_failure == ClaimFailure::kNotVisible) r += cfg.s_claim_not_visible;
    } else {
      r += cfg.s_fail;
    }
  } else if (a.new_location) {
    r += cfg.s_new_location;
  } else if (a.new_opened) {
    r += cfg.s_new_open;
  } else if (a.action.kind == ActionKind::kClaimVisible) {
    r += cfg.s_success;
  }
  return r;
}

double oh_percentile(int seeker_steps, std::span<const int> rollout_lengths) {
  if (rollout_lengths.empty()) throw PreconditionError("oh_percentile: no rollout lengths");
  const auto hits = std::count_if(rollout_lengths.begin(), rollout_lengths.end(),
                                  [&](int l) { return l <= seeker_steps; });
  return -1.0 + 2.0 * static_cast<double>(hits) / static_cast<double>(rollout_lengths.size());
}

ExplorationMetrics exploration_metrics(const ExplorationTrace& em, const Scene& scene) {
  std::set<Tuple3> reach;
  for (const Cell& c : reachable_cells(scene)) {
    reach.insert({c.x, c.z, 0});
    reach.insert({c.x, c.z, 1});
  }
  std::set<Tuple3> visited;
  for (const Pose& p : em.visited) visited.insert(drop_rotation(p));
  std::set<Tuple3> extrap;
  for (const Pose& p : em.extrapolated) {
    if (reach.count(drop_rotation(p))) extrap.insert(drop_rotation(p));
  }
  ExplorationMetrics m;
  const double denom = static_cast<double>(reach.size());
  m.coverage = static_cast<double>(visited.size()) / denom;
  m.coverage_plus = static_cast<double>(extrap.size()) / denom;
  m.open_pct = scene.openable_count() == 0
                   ? 1.0
                   : static_cast<double>(em.opened.size()) / scene.openable_count();
  return m;
}

HidingMetrics hiding_metrics(const Scene& scene, const ObjectStates& states, Cell seeker_start) {
  if (!states.goal) throw PreconditionError("hiding_metrics: goal is not placed");
  HidingMetrics m;
  m.visible_from_pct = visible_from_fraction(scene, states);
  const BfsResult bfs = bfs_seek(scene, *states.goal, seeker_start);
  m.bfs_found = bfs.found;
  m.bfs_steps = bfs.steps;
  const std::size_t cells = reachable_cells(scene).size();
  m.bfs_steps_pct = cells == 0 ? 1.0 : static_cast<double>(bfs.steps) / static_cast<double>(cells);
  return m;
}

}  // namespace gridcache
