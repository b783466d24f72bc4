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

#ifndef GRIDCACHE_PERSPECTIVE_H_
#define GRIDCACHE_PERSPECTIVE_H_

// Metric map and the perspective-simulation pipeline: candidate scoring,
// outcome sampling without replacement, Horvitz-Thompson weights, mental
// seeker rollouts, hide-pose choice and the PS training losses.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "gridcache/gamecore.h"
#include "gridcache/rng.h"
#include "gridcache/world.h"

namespace gridcache {

// Per window cell flags stored in a map record.
enum CellFlag : std::uint16_t {
  kFlagInBounds = 1u << 0,
  kFlagVisible = 1u << 1,
  kFlagWalkable = 1u << 2,
  kFlagWall = 1u << 3,
  kFlagFurniture = 1u << 4,
  kFlagObject = 1u << 5,
  kFlagOpenable = 1u << 6,
  kFlagOpen = 1u << 7,
  kFlagContainer = 1u << 8,
  kFlagOpaque = 1u << 9,
  kFlagGoal = 1u << 10,
};
inline constexpr int kCellFlagCount = 11;
// Visit count followed by the flags of the 49 window cells.
inline constexpr int kRecordWidth = 1 + kWindowCells * kCellFlagCount;

struct MapRecord {
  int visits = 0;
  int last_write = 0;
  std::array<std::uint16_t, kWindowCells> cells{};
  bool operator==(const MapRecord&) const = default;
};

struct ObservedCell {
  Terrain terrain = Terrain::kWall;
  std::vector<WorldObject> objects;  // receptacles and occluders seen there
  bool operator==(const ObservedCell&) const = default;
};

// dims = {4 rotations, 2 stances, kRecordWidth, h, w}; row = z - min_z grows
// southward, column = x - min_x grows eastward.
struct MapTensor {
  int min_x = 0;
  int min_z = 0;
  int h = 0;
  int w = 0;
  std::vector<double> data;
  double at(int rotation, int standing, int channel, int row, int col) const;
};

// Pose-keyed memory written during E&M. Writes are last-write-wins.
class MetricMap {
 public:
  void write(const Scene& scene, const ObjectStates& states, const Pose& pose, int t);
  void write(const Scene& scene, const ViewWindow& window, int t);

  const MapRecord* read_at(const Pose& pose) const;
  const std::map<Pose, MapRecord>& records() const { return records_; }
  const std::map<Cell, ObservedCell>& observed() const { return observed_; }
  // Distinct mapped poses whose window saw the cell.
  int seen_count(Cell c) const;
  bool empty() const { return records_.empty(); }
  MapTensor read() const;

 private:
  std::map<Pose, MapRecord> records_;
  std::map<Cell, ObservedCell> observed_;
  std::map<Cell, int> seen_;
};

// Scene reconstructed from the map: observed cells keep their terrain and
// objects, every other cell is a wall. Coordinates match the true scene.
// Returns nullopt when the start cell is not a mapped free cell.
std::optional<Scene> belief_scene(const MetricMap& map, const Pose& start);

// 1 - estimated visible-from fraction of the pose's best placement slot,
// where a cell's estimate is seen_count / mapped poses and a closed opaque
// container counts as 0. Unmapped pose or empty map gives 0.
double heuristic_hide_value(const MetricMap& map, const Pose& pose);

using OutcomeRow = std::array<double, kHideOutcomeCount>;

std::vector<double> softmax(std::span<const double> logits, double scale = 1.0);

// Tabular P (logits) and V (scores) over (pose, outcome); missing rows read
// as zeros.
class HideEvaluator {
 public:
  const OutcomeRow& p(const Pose& pose) const;
  const OutcomeRow& v(const Pose& pose) const;
  OutcomeRow& mutable_p(const Pose& pose) { return p_[pose]; }
  OutcomeRow& mutable_v(const Pose& pose) { return v_[pose]; }
  const std::map<Pose, OutcomeRow>& p_rows() const { return p_; }
  const std::map<Pose, OutcomeRow>& v_rows() const { return v_; }

  // Uniform P and V rows equal to heuristic_hide_value for every mapped pose.
  static HideEvaluator from_heuristic(const MetricMap& map);

 private:
  std::map<Pose, OutcomeRow> p_;
  std::map<Pose, OutcomeRow> v_;
};

// Σ_e softmax(P_pose)_e V_pose,e for every mapped pose.
std::map<Pose, double> score_locations(const HideEvaluator& evaluator, const MetricMap& map);

// Top five by score (ties by pose order) plus five distinct uniform picks
// from the rest; all poses when there are at most ten.
std::vector<Pose> select_candidates(const std::map<Pose, double>& scores, Rng& rng,
                                    std::size_t top = 5, std::size_t random = 5);

// k distinct outcome indices by successive sampling without replacement
// from softmax(logits). Throws PreconditionError if fewer than k outcomes
// have positive probability.
std::vector<int> sample_outcomes(std::span<const double> logits, std::size_t k, Rng& rng);

// Exact probability that outcome e appears among k successive draws without
// replacement from probs.
double inclusion_probability(std::span<const double> probs, int e, std::size_t k);

// w_j = p_{e_j} / π_{e_j} with k = sampled.size(). Throws PreconditionError
// for repeated or zero-probability outcomes.
std::vector<double> ht_weights(std::span<const double> probs, std::span<const int> sampled);

// Where the goal would rest in a world for hiding outcome e at pose ℓ; fail
// and unplaceable outcomes drop from the default hand position.
GoalPlacement placement_for_outcome(const Scene& world, const Pose& pose, const HideOutcome& e,
                                    GoalType goal_type);

struct RolloutConfig {
  int rollouts = 50;
  int max_steps = 500;
  double epsilon = 0.2;
};

// Simulated S episodes of the ε-greedy mental seeker: when the goal is
// visible within range it claims; otherwise with probability ε it takes a
// uniform navigation action, else the first shortest-path action. Lengths
// include the final ClaimVisible and are capped at max_steps.
std::vector<int> mental_rollouts(const Scene& world, const GoalPlacement& goal,
                                 const Pose& seeker_start, const RolloutConfig& cfg, Rng& rng);

// Index sampled from softmax(temperature * mu).
std::size_t choose_hide_pose(std::span<const double> mu, Rng& rng, double temperature = 0.04);

struct RolloutEstimate {
  std::vector<Pose> candidates;
  std::vector<std::vector<int>> outcomes;    // per candidate, sampled outcome indices
  std::vector<std::vector<double>> lengths;  // μ_ij
  std::vector<std::vector<double>> weights;  // w_ij
  std::vector<double> mu;                    // μ_i = Σ_j w_ij μ_ij
};

struct PsPlan {
  RolloutEstimate estimate;
  std::size_t chosen = 0;
  Pose pose;
};

// Scores mapped poses, picks candidates, estimates each candidate's expected
// rollout length in the belief world, and samples the hide pose.
PsPlan plan_hide_pose(const MetricMap& map, const HideEvaluator& evaluator, const Scene& belief,
                      const Pose& seeker_start, GoalType goal_type, Rng& rng,
                      const RolloutConfig& cfg = {}, std::size_t outcomes_per_candidate = 3);

struct PsLosses {
  double xent = 0.0;
  double ranking = 0.0;
  OutcomeRow grad_p{};  // d xent / d P_ℓ
  // d ranking / d V at (candidate pose, outcome).
  std::vector<std::tuple<Pose, int, double>> grad_v;
};

// xent = -log softmax(P_ℓ)_e; ranking = mean BCE over all unordered pairs of
// the estimate's (i, j) items with logit V_a - V_b and target
// (sign(μ_a - μ_b) + 1) / 2.
PsLosses ps_losses(const HideEvaluator& evaluator, const Pose& realized_pose, int realized_outcome,
                   const RolloutEstimate& estimate);

}  // namespace gridcache

#endif  // GRIDCACHE_PERSPECTIVE_H_
