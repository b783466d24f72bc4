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

#ifndef GRIDCACHE_LEARNER_H_
#define GRIDCACHE_LEARNER_H_

// Desk-scale actor-critic learning: features, linear per-stage heads, GAE,
// the A3C and imitation losses with analytic gradients, Adam with AMSGrad,
// OM hindsight relabelling and the training loop.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridcache/agent.h"
#include "gridcache/gamecore.h"
#include "gridcache/oracle.h"
#include "gridcache/perspective.h"
#include "gridcache/rewards.h"
#include "gridcache/rng.h"
#include "gridcache/world.h"

namespace gridcache {

// Window flags per cell: visible, walkable, blocked, openable, open, goal.
inline constexpr int kWindowFeatureFlags = 6;
inline constexpr int kFeatureCount = kWindowCells * kWindowFeatureFlags  // window
                                     + 1                                  // standing
                                     + kStageCount                        // stage one-hot
                                     + 1                                  // holding the goal
                                     + 1                                  // t / limit
                                     + kActionKindCount + 1               // last action, success
                                     + 1                                  // goal visible within 6
                                     + 3                                  // hand i, j, height
                                     + 5                                  // OM target m one-hot, i, j
                                     + 1;                                 // bias
// Offset of the OM target block, rewritten by hindsight relabelling.
inline constexpr int kTargetFeatureOffset = kFeatureCount - 6;

using Features = std::vector<double>;

// Features of the acting agent's view. target overrides the OM target.
Features featurize(const ViewWindow& window, const GameState& state,
                   std::optional<Target> target = std::nullopt);
Features featurize(const GameState& state);
void set_target_features(Features& x, const Target& target);

// Discrete action space of a stage's head: E&M 57, OH 200, OM 56, S 58. PS
// is driven by the perspective tables and has no head.
const std::vector<Action>& action_space(Stage stage);
std::optional<std::size_t> action_index(Stage stage, const Action& action);

struct StageHead {
  int actions = 0;
  std::vector<double> w;  // actions x kFeatureCount, row-major
  std::vector<double> u;  // value weights, kFeatureCount

  std::vector<double> logits(const Features& x) const;
  double value(const Features& x) const;
  std::size_t parameter_count() const { return w.size() + u.size(); }
  bool operator==(const StageHead&) const = default;
};

// Zero-initialised heads: every stage starts as a uniform random policy.
struct LinearPolicy {
  std::array<StageHead, kStageCount> heads;

  static LinearPolicy zeros();
  const StageHead& head(Stage s) const { return heads[static_cast<std::size_t>(s)]; }
  StageHead& head(Stage s) { return heads[static_cast<std::size_t>(s)]; }
  bool operator==(const LinearPolicy&) const = default;
};

std::string serialize_policy(const LinearPolicy& policy);
// Throws ParseError / VersionError.
LinearPolicy parse_policy(std::string_view text);

// A_t = Σ_l (γτ)^l δ_{t+l}, δ_t = r_t + γ V_{t+1} - V_t, V_N = bootstrap.
// Throws PreconditionError on length mismatch.
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        double gamma, double tau, double bootstrap);
// Discounted returns-to-go with the same bootstrap.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma,
                                       double bootstrap);

struct A3cLoss {
  double total = 0.0;
  double policy = 0.0;   // -Σ log π(a_t) A_t
  double value = 0.0;    // ½ Σ (V_t - R_t)²
  double entropy = 0.0;  // Σ H(π_t)
  std::vector<std::vector<double>> dlogits;
  std::vector<double> dvalues;
};
// total = policy + value - β entropy.
A3cLoss a3c_loss(const std::vector<std::vector<double>>& logits, std::span<const std::size_t> actions,
                 std::span<const double> advantages, std::span<const double> returns,
                 std::span<const double> values, double beta);

struct ImitationLoss {
  double loss = 0.0;
  std::vector<double> dlogits;
};
ImitationLoss imitation_loss(std::span<const double> logits, std::size_t expert);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.99;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool amsgrad = true;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> v_max;
  std::int64_t t = 0;
};

// One bias-corrected Adam update; with AMSGrad the denominator uses the
// running maximum of the second moment.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);

struct Relabeled {
  Target target;
  std::vector<double> rewards;
};
// Replaces the target of a failed OM episode with what the final drop
// achieved and recomputes every reward. Throws PreconditionError for
// successful episodes and episodes without an on-window drop.
Relabeled hindsight_relabel(const ExplorationTrace& om_trace, const Target& original,
                            const RewardConfig& cfg = {});

struct LearnerConfig {
  double gamma = 0.99;
  double gamma_oh = 0.8;
  double tau = 1.0;
  double beta = 0.01;
  double lr = 1e-4;
  double lr_ps = 5e-4;
  int n_step = 20;
  double imitation_weight = 1.0;
  RewardConfig rewards;
  GameLimits limits;
  RolloutConfig ps_rollouts{8, 200, 0.2};
  int percentile_rollouts = 100;
  int workers = 1;
};

// Hider memory for one game: the metric map written during E&M and the PS
// plan.
struct HiderMemory {
  MetricMap map;
  std::vector<double> hide_values;  // v_1.. per E&M step
  double start_value = 0.0;
  std::optional<Scene> belief;
  std::optional<PsPlan> plan;
};

// Writes the hider's current view into the map (E&M only) and records v_t.
void remember(HiderMemory& memory, const GameState& state);
// Plans with the evaluator (missing rows seeded from the heuristic) and
// returns the ChooseHidePose action for the plan.
Action plan_hide_action(HiderMemory& memory, HideEvaluator& evaluator, const GameState& state,
                        Rng& rng, const RolloutConfig& cfg);

// Acts with a LinearPolicy: samples from the stage head, plans PS with the
// evaluator. Records per-stage trajectories for training.
class LearnedAgent : public Policy {
 public:
  struct StepSample {
    Stage stage;
    Features x;
    std::size_t action;
    std::optional<std::size_t> expert;  // S imitation target
  };

  LearnedAgent(std::shared_ptr<const LinearPolicy> policy, std::shared_ptr<HideEvaluator> evaluator,
               RolloutConfig ps_cfg, bool greedy = false, bool record = false);

  std::string name() const override { return "learned"; }
  void begin(const GameState& state, Rng& rng) override;
  Action act(const GameState& state, Rng& rng) override;
  void observe(const GameState& state, const StepResult& result) override;

  const std::vector<StepSample>& samples() const { return samples_; }
  HiderMemory& memory() { return memory_; }

 private:
  std::shared_ptr<const LinearPolicy> policy_;
  std::shared_ptr<HideEvaluator> evaluator_;
  RolloutConfig ps_cfg_;
  bool greedy_;
  bool record_;
  HiderMemory memory_;
  std::vector<StepSample> samples_;
  std::optional<VisibilityField> expert_;
  int ps_attempts_ = 0;
};

struct TrainResult {
  LinearPolicy policy;
  HideEvaluator evaluator;
  std::vector<std::string> log;  // one JSON object per episode
};

// Plays `episodes` self-play games (learned hider vs learned seeker) over
// the scenes in round-robin order and applies Adam updates every n_step
// actions per stage. With one worker the log is bit-reproducible.
TrainResult train(const LearnerConfig& config, const std::vector<std::shared_ptr<const Scene>>& scenes,
                  int episodes, std::uint64_t seed,
                  const std::function<void(const std::string&)>& on_log = {});

}  // namespace gridcache

#endif  // GRIDCACHE_LEARNER_H_
