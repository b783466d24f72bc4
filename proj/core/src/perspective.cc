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

#include "gridcache/perspective.h"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "gridcache/error.h"
#include "gridcache/oracle.h"

namespace gridcache {

double MapTensor::at(int rotation, int standing, int channel, int row, int col) const {
  const std::size_t idx =
      ((((static_cast<std::size_t>(rotation) * 2 + static_cast<std::size_t>(standing)) *
             kRecordWidth +
         static_cast<std::size_t>(channel)) *
            static_cast<std::size_t>(h) +
        static_cast<std::size_t>(row)) *
           static_cast<std::size_t>(w) +
       static_cast<std::size_t>(col));
  return data.at(idx);
}

void MetricMap::write(const Scene& scene, const ObjectStates& states, const Pose& pose, int t) {
  write(scene, view_window(scene, states, pose), t);
}

void MetricMap::write(const Scene& scene, const ViewWindow& window, int t) {
  const bool first = records_.find(window.pose) == records_.end();
  MapRecord& rec = records_[window.pose];
  ++rec.visits;
  rec.last_write = t;

  // The agent's own cell is known from standing on it.
  const Cell own = window.pose.cell();
  if (!observed_.count(own)) {
    observed_[own] = ObservedCell{scene.terrain(own), {}};
  }

  for (std::size_t k = 0; k < window.cells.size(); ++k) {
    const ViewCell& vc = window.cells[k];
    std::uint16_t f = 0;
    if (vc.in_bounds) {
      f |= kFlagInBounds;
      if (vc.visible) f |= kFlagVisible;
    }
    if (vc.in_bounds && vc.visible) {
      if (scene.walkable(vc.world)) f |= kFlagWalkable;
      if (vc.terrain == Terrain::kWall) f |= kFlagWall;
      if (vc.terrain == Terrain::kFurnitureLow || vc.terrain == Terrain::kFurnitureHigh) {
        f |= kFlagFurniture;
      }
      ObservedCell obs{vc.terrain, {}};
      for (std::size_t idx : scene.objects_at(vc.world)) {
        const WorldObject& o = scene.objects()[idx];
        if (o.kind == ObjectKind::kGoal) continue;
        obs.objects.push_back(o);
        f |= kFlagObject;
        if (o.openable) f |= kFlagOpenable;
        if (o.slots.contains(Modality::kContainedIn)) f |= kFlagContainer;
        if (o.opaque_when_closed) f |= kFlagOpaque;
      }
      for (const Occupant& occ : vc.occupants) {
        if (occ.kind == ObjectKind::kGoal && occ.visible) f |= kFlagGoal;
        if (occ.kind != ObjectKind::kGoal && occ.open) f |= kFlagOpen;
      }
      observed_[vc.world] = std::move(obs);
      if (first) ++seen_[vc.world];
    }
    rec.cells[k] = f;
  }
}

const MapRecord* MetricMap::read_at(const Pose& pose) const {
  const auto it = records_.find(pose);
  return it == records_.end() ? nullptr : &it->second;
}

int MetricMap::seen_count(Cell c) const {
  const auto it = seen_.find(c);
  return it == seen_.end() ? 0 : it->second;
}

MapTensor MetricMap::read() const {
  MapTensor t;
  if (records_.empty()) return t;
  int min_x = records_.begin()->first.x, max_x = min_x;
  int min_z = records_.begin()->first.z, max_z = min_z;
  for (const auto& [pose, rec] : records_) {
    min_x = std::min(min_x, pose.x);
    max_x = std::max(max_x, pose.x);
    min_z = std::min(min_z, pose.z);
    max_z = std::max(max_z, pose.z);
  }
  t.min_x = min_x;
  t.min_z = min_z;
  t.w = max_x - min_x + 1;
  t.h = max_z - min_z + 1;
  const std::size_t plane = static_cast<std::size_t>(t.h) * static_cast<std::size_t>(t.w);
  t.data.assign(8 * kRecordWidth * plane, 0.0);
  for (const auto& [pose, rec] : records_) {
    const std::size_t base = (static_cast<std::size_t>(pose.rotation) * 2 + (pose.standing ? 1 : 0)) *
                             kRecordWidth * plane;
    const std::size_t pix = static_cast<std::size_t>(pose.z - min_z) * static_cast<std::size_t>(t.w) +
                            static_cast<std::size_t>(pose.x - min_x);
    t.data[base + pix] = rec.visits;
    for (std::size_t k = 0; k < rec.cells.size(); ++k) {
      for (int b = 0; b < kCellFlagCount; ++b) {
        if ((rec.cells[k] >> b) & 1u) {
          const std::size_t channel = 1 + k * kCellFlagCount + static_cast<std::size_t>(b);
          t.data[base + channel * plane + pix] = 1.0;
        }
      }
    }
  }
  return t;
}

std::optional<Scene> belief_scene(const MetricMap& map, const Pose& start) {
  if (map.observed().empty()) return std::nullopt;
  int max_x = start.x;
  int max_z = start.z;
  for (const auto& [c, obs] : map.observed()) {
    if (c.x < 0 || c.z < 0) continue;
    max_x = std::max(max_x, c.x);
    max_z = std::max(max_z, c.z);
  }
  SceneDescription d;
  d.id = "belief";
  d.width = max_x + 1;
  d.height = max_z + 1;
  d.terrain.assign(static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.height),
                   Terrain::kWall);
  for (const auto& [c, obs] : map.observed()) {
    if (c.x < 0 || c.z < 0) continue;
    d.terrain[static_cast<std::size_t>(c.z * d.width + c.x)] = obs.terrain;
    for (const WorldObject& o : obs.objects) {
      if (obs.terrain != Terrain::kWall) d.objects.push_back(o);
    }
  }
  d.start = start;
  try {
    return Scene::create(std::move(d));
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

double heuristic_hide_value(const MetricMap& map, const Pose& pose) {
  const MapRecord* rec = map.read_at(pose);
  if (!rec || map.empty()) return 0.0;
  const double poses = static_cast<double>(map.records().size());
  std::optional<double> best;
  for (int i = 1; i <= kWindowSize; ++i) {
    for (int j = 1; j <= kWindowSize; ++j) {
      const std::uint16_t f = rec->cells[static_cast<std::size_t>((i - 1) * kWindowSize + (j - 1))];
      if (!(f & kFlagVisible) || (f & kFlagWall)) continue;
      double estimate = static_cast<double>(map.seen_count(window_cell(pose, i, j))) / poses;
      if ((f & kFlagContainer) && (f & kFlagOpaque)) estimate = 0.0;
      estimate = std::clamp(estimate, 0.0, 1.0);
      if (!best || estimate < *best) best = estimate;
    }
  }
  return best ? 1.0 - *best : 0.0;
}

std::vector<double> softmax(std::span<const double> logits, double scale) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  double hi = -INFINITY;
  for (double x : logits) hi = std::max(hi, scale * x);
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(scale * logits[k] - hi);
    total += out[k];
  }
  for (double& x : out) x /= total;
  return out;
}

namespace {
const OutcomeRow kZeroRow{};
}

const OutcomeRow& HideEvaluator::p(const Pose& pose) const {
  const auto it = p_.find(pose);
  return it == p_.end() ? kZeroRow : it->second;
}

const OutcomeRow& HideEvaluator::v(const Pose& pose) const {
  const auto it = v_.find(pose);
  return it == v_.end() ? kZeroRow : it->second;
}

HideEvaluator HideEvaluator::from_heuristic(const MetricMap& map) {
  HideEvaluator e;
  for (const auto& [pose, rec] : map.records()) {
    e.mutable_p(pose).fill(0.0);
    e.mutable_v(pose).fill(heuristic_hide_value(map, pose));
  }
  return e;
}

std::map<Pose, double> score_locations(const HideEvaluator& evaluator, const MetricMap& map) {
  std::map<Pose, double> out;
  for (const auto& [pose, rec] : map.records()) {
    const std::vector<double> probs = softmax(evaluator.p(pose));
    const OutcomeRow& v = evaluator.v(pose);
    double s = 0.0;
    for (std::size_t e = 0; e < probs.size(); ++e) s += probs[e] * v[e];
    out[pose] = s;
  }
  return out;
}

std::vector<Pose> select_candidates(const std::map<Pose, double>& scores, Rng& rng,
                                    std::size_t top, std::size_t random) {
  std::vector<std::pair<double, Pose>> ranked;
  ranked.reserve(scores.size());
  for (const auto& [pose, s] : scores) ranked.push_back({s, pose});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Pose> out;
  if (ranked.size() <= top + random) {
    for (const auto& [s, pose] : ranked) out.push_back(pose);
    return out;
  }
  for (std::size_t k = 0; k < top; ++k) out.push_back(ranked[k].second);
  std::vector<Pose> rest;
  for (std::size_t k = top; k < ranked.size(); ++k) rest.push_back(ranked[k].second);
  // Partial Fisher-Yates over the non-top poses.
  for (std::size_t k = 0; k < random; ++k) {
    const std::size_t pick = k + rng.below(rest.size() - k);
    std::swap(rest[k], rest[pick]);
    out.push_back(rest[k]);
  }
  return out;
}

std::vector<int> sample_outcomes(std::span<const double> logits, std::size_t k, Rng& rng) {
  std::vector<double> w = softmax(logits);
  const auto positive = std::count_if(w.begin(), w.end(), [](double x) { return x > 0.0; });
  if (static_cast<std::size_t>(positive) < k) {
    throw PreconditionError("sample_outcomes: fewer than k outcomes with positive probability");
  }
  std::vector<int> out;
  for (std::size_t d = 0; d < k; ++d) {
    const std::size_t e = rng.categorical(w);
    out.push_back(static_cast<int>(e));
    w[e] = 0.0;
  }
  return out;
}

namespace {

// Probability that e is drawn within `left` further draws, given the items
// in `used` are gone with total mass `gone`.
double inclusion_rec(std::span<const double> probs, int e, std::size_t left, double gone,
                     std::vector<char>& used) {
  const double remaining = 1.0 - gone;
  if (left == 0 || remaining <= 0.0) return 0.0;
  double p = probs[static_cast<std::size_t>(e)] / remaining;
  if (left == 1) return p;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (used[a] || static_cast<int>(a) == e || probs[a] <= 0.0) continue;
    used[a] = 1;
    p += probs[a] / remaining * inclusion_rec(probs, e, left - 1, gone + probs[a], used);
    used[a] = 0;
  }
  return p;
}

}  // namespace

double inclusion_probability(std::span<const double> probs, int e, std::size_t k) {
  std::vector<char> used(probs.size(), 0);
  return inclusion_rec(probs, e, k, 0.0, used);
}

std::vector<double> ht_weights(std::span<const double> probs, std::span<const int> sampled) {
  std::vector<double> w;
  for (std::size_t j = 0; j < sampled.size(); ++j) {
    const int e = sampled[j];
    if (e < 0 || static_cast<std::size_t>(e) >= probs.size() || probs[static_cast<std::size_t>(e)] <= 0.0) {
      throw PreconditionError("ht_weights: outcome with zero probability");
    }
    for (std::size_t q = 0; q < j; ++q) {
      if (sampled[q] == e) throw PreconditionError("ht_weights: repeated outcome");
    }
    w.push_back(probs[static_cast<std::size_t>(e)] / inclusion_probability(probs, e, sampled.size()));
  }
  return w;
}

GoalPlacement placement_for_outcome(const Scene& world, const Pose& pose, const HideOutcome& e,
                                    GoalType goal_type) {
  const ObjectStates closed = ObjectStates::initial(world);
  auto fallback = [&] {
    const Landing l = land_object(world, closed, pose, {1, kWindowCenterColumn, Height::kHigh},
                                  goal_type);
    return GoalPlacement{goal_type, l.cell, l.container};
  };
  if (e.fail) return fallback();
  const Pose at{pose.x, pose.z, pose.rotation, e.standing};
  const Cell c = window_cell(at, e.i, e.j);
  if (!world.in_bounds(c)) return fallback();
  if (e.modality == Modality::kContainedIn) {
    for (std::size_t k : world.objects_at(c)) {
      const WorldObject& o = world.objects()[k];
      if (o.slots.contains(Modality::kContainedIn) &&
          static_cast<int>(o.capacity) >= static_cast<int>(goal_size(goal_type))) {
        return {goal_type, c, k};
      }
    }
    return fallback();
  }
  if (!supports_resting(world, c)) return fallback();
  return {goal_type, c, std::nullopt};
}

std::vector<int> mental_rollouts(const Scene& world, const GoalPlacement& goal,
                                 const Pose& seeker_start, const RolloutConfig& cfg, Rng& rng) {
  ObjectStates states = ObjectStates::initial(world);
  states.goal = goal;
  const VisibilityField field(world, states);
  std::vector<int> lengths;
  lengths.reserve(static_cast<std::size_t>(cfg.rollouts));
  for (int n = 0; n < cfg.rollouts; ++n) {
    VisibilityField::State s = field.initial(seeker_start);
    int steps = 0;
    while (steps < cfg.max_steps) {
      ++steps;
      if (field.visible(s)) break;
      std::optional<Action> a;
      if (!rng.bernoulli(cfg.epsilon)) a = field.best_action(s);
      if (!a) {
        a = Action::simple(VisibilityField::kNavActions[rng.below(VisibilityField::kNavActions.size())]);
      }
      if (auto t = field.successor(s, *a)) s = *t;
    }
    lengths.push_back(steps);
  }
  return lengths;
}

std::size_t choose_hide_pose(std::span<const double> mu, Rng& rng, double temperature) {
  if (mu.empty()) throw PreconditionError("choose_hide_pose: no candidates");
  const std::vector<double> p = softmax(mu, temperature);
  return rng.categorical(p);
}

PsPlan plan_hide_pose(const MetricMap& map, const HideEvaluator& evaluator, const Scene& belief,
                      const Pose& seeker_start, GoalType goal_type, Rng& rng,
                      const RolloutConfig& cfg, std::size_t outcomes_per_candidate) {
  if (map.empty()) throw PreconditionError("plan_hide_pose: empty map");
  PsPlan plan;
  RolloutEstimate& est = plan.estimate;
  est.candidates = select_candidates(score_locations(evaluator, map), rng);
  for (const Pose& pose : est.candidates) {
    const OutcomeRow& logits = evaluator.p(pose);
    const std::vector<double> probs = softmax(logits);
    const std::vector<int> sampled = sample_outcomes(logits, outcomes_per_candidate, rng);
    const std::vector<double> w = ht_weights(probs, sampled);
    std::vector<double> lens;
    double mu = 0.0;
    for (std::size_t j = 0; j < sampled.size(); ++j) {
      const GoalPlacement g =
          placement_for_outcome(belief, pose, HideOutcome::from_index(sampled[j]), goal_type);
      const std::vector<int> l = mental_rollouts(belief, g, seeker_start, cfg, rng);
      double mean = 0.0;
      for (int x : l) mean += x;
      mean /= static_cast<double>(l.size());
      lens.push_back(mean);
      mu += w[j] * mean;
    }
    est.outcomes.push_back(sampled);
    est.lengths.push_back(std::move(lens));
    est.weights.push_back(w);
    est.mu.push_back(mu);
  }
  plan.chosen = choose_hide_pose(est.mu, rng);
  plan.pose = est.candidates[plan.chosen];
  return plan;
}

PsLosses ps_losses(const HideEvaluator& evaluator, const Pose& realized_pose, int realized_outcome,
                   const RolloutEstimate& estimate) {
  PsLosses out;
  const OutcomeRow& logits = evaluator.p(realized_pose);
  const std::vector<double> probs = softmax(logits);
  out.xent = -std::log(probs[static_cast<std::size_t>(realized_outcome)]);
  for (std::size_t e = 0; e < probs.size(); ++e) out.grad_p[e] = probs[e];
  out.grad_p[static_cast<std::size_t>(realized_outcome)] -= 1.0;

  struct Item {
    Pose pose;
    int outcome;
    double v;
    double mu;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < estimate.candidates.size(); ++i) {
    for (std::size_t j = 0; j < estimate.outcomes[i].size(); ++j) {
      const Pose& pose = estimate.candidates[i];
      const int e = estimate.outcomes[i][j];
      items.push_back({pose, e, evaluator.v(pose)[static_cast<std::size_t>(e)], estimate.lengths[i][j]});
    }
  }
  const std::size_t n = items.size();
  if (n < 2) return out;
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  std::vector<double> grad(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double x = items[a].v - items[b].v;
      const double d = items[a].mu - items[b].mu;
      const double y = d > 0 ? 1.0 : (d < 0 ? 0.0 : 0.5);
      // BCE(σ(x), y) = softplus(x) - y x.
      const double softplus = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      out.ranking += (softplus - y * x) / pairs;
      const double sig = 1.0 / (1.0 + std::exp(-x));
      grad[a] += (sig - y) / pairs;
      grad[b] -= (sig - y) / pairs;
    }
  }
  for (std::size_t a = 0; a < n; ++a) out.grad_v.emplace_back(items[a].pose, items[a].outcome, grad[a]);
  return out;
}

}  // namespace gridcache
