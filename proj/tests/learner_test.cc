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

#include <cmath>
#include <set>

#include "doctest.h"
#include "gridcache/error.h"
#include "gridcache/learner.h"
#include "json.hpp"
#include "oracles.h"
#include "reward_goldens.h"
#include "support.h"

using namespace gridcache;

namespace {

std::vector<double> uniform_vec(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> x(n);
  for (double& v : x) v = lo + (hi - lo) * rng.uniform();
  return x;
}

}  // namespace

TEST_CASE("features") {
  GameState g = start_game(support::room9(), GoalType::kCup, 1);
  const Features x = featurize(g);
  REQUIRE(x.size() == static_cast<std::size_t>(kFeatureCount));
  CHECK(kFeatureCount == 333);
  CHECK(x.back() == 1.0);
  const std::size_t stage0 = kWindowCells * kWindowFeatureFlags + 1;
  CHECK(x[stage0] == 1.0);
  for (int s = 1; s < kStageCount; ++s) CHECK(x[stage0 + static_cast<std::size_t>(s)] == 0.0);
  for (double v : x) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  Features y = x;
  set_target_features(y, {Modality::kBehind, 7, 1});
  CHECK(y[kTargetFeatureOffset + 2] == 1.0);
  CHECK(y[kTargetFeatureOffset + 3] == 1.0);
  CHECK(y[kTargetFeatureOffset + 4] == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("head action spaces") {
  CHECK(action_space(Stage::kEM).size() == 57);
  CHECK(action_space(Stage::kOH).size() == 200);
  CHECK(action_space(Stage::kOM).size() == 56);
  CHECK(action_space(Stage::kS).size() == 58);
  CHECK(action_space(Stage::kPS).empty());
  for (Stage s : {Stage::kEM, Stage::kOH, Stage::kOM, Stage::kS}) {
    const auto& space = action_space(s);
    std::set<std::string> names;
    for (std::size_t k = 0; k < space.size(); ++k) {
      CHECK(is_legal(s, space[k].kind));
      CHECK(action_index(s, space[k]) == k);
      names.insert(format_action(space[k]));
    }
    CHECK(names.size() == space.size());
  }
  CHECK_FALSE(action_index(Stage::kEM, Action::simple(ActionKind::kClaimVisible)).has_value());
}

TEST_CASE("zero policy is uniform") {
  const LinearPolicy p = LinearPolicy::zeros();
  const GameState g = start_game(support::room9(), GoalType::kCup, 1);
  const auto logits = p.head(Stage::kEM).logits(featurize(g));
  CHECK(logits.size() == 57);
  for (double l : logits) CHECK(l == 0.0);
  CHECK(p.head(Stage::kEM).value(featurize(g)) == 0.0);
  CHECK(p.head(Stage::kEM).parameter_count() == 58 * 333);
}

TEST_CASE("policy text round trip") {
  LinearPolicy p = LinearPolicy::zeros();
  Rng rng(1);
  for (auto& h : p.heads) {
    for (double& w : h.w) w = (rng.uniform() - 0.5) * 1e-3 * std::exp(rng.uniform() * 20 - 10);
    for (double& u : h.u) u = rng.uniform() - 0.5;
  }
  const std::string text = serialize_policy(p);
  CHECK(parse_policy(text) == p);
  CHECK(serialize_policy(parse_policy(text)) == text);
  CHECK_THROWS_AS(parse_policy("cache-policy 9\n"), VersionError);
  CHECK_THROWS_AS(parse_policy("nonsense\n"), ParseError);
  CHECK_THROWS_AS(parse_policy(text.substr(0, text.size() / 2)), ParseError);
}

TEST_CASE("GAE equals the brute-force discounted sum") {
  Rng rng(2);
  for (int n = 0; n < 100; ++n) {
    const std::size_t len = 1 + rng.below(40);
    const auto r = uniform_vec(rng, len, -1, 1);
    const auto v = uniform_vec(rng, len, -2, 2);
    const double gamma = 0.8 + 0.2 * rng.uniform();
    const double tau = rng.uniform();
    const double boot = rng.uniform();
    const auto got = gae(r, v, gamma, tau, boot);
    const auto want = oracle::gae(r, v, gamma, tau, boot);
    for (std::size_t t = 0; t < len; ++t) CHECK(std::abs(got[t] - want[t]) <= 1e-12);
  }
  CHECK_THROWS_AS(gae(std::vector<double>{1.0}, std::vector<double>{}, 0.9, 1.0, 0.0), PreconditionError);
}

TEST_CASE("discounted returns") {
  const std::vector<double> r{1.0, 0.0, 2.0};
  const auto got = discounted_returns(r, 0.5, 4.0);
  CHECK(got[2] == 2.0 + 0.5 * 4.0);
  CHECK(got[1] == 0.0 + 0.5 * got[2]);
  CHECK(got[0] == 1.0 + 0.5 * got[1]);
  // With tau = 1, advantages plus values are the returns.
  const std::vector<double> v{0.3, -0.2, 0.7};
  const auto a = gae(r, v, 0.5, 1.0, 4.0);
  for (std::size_t t = 0; t < r.size(); ++t) CHECK(a[t] + v[t] == doctest::Approx(got[t]).epsilon(1e-14));
}

TEST_CASE("A3C and imitation gradients match central differences") {
  Rng rng(3);
  const double h = 1e-6;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); };
  for (int n = 0; n < 20; ++n) {
    const std::size_t steps = 1 + rng.below(5);
    const std::size_t actions = 2 + rng.below(8);
    std::vector<std::vector<double>> logits;
    std::vector<std::size_t> acts;
    for (std::size_t t = 0; t < steps; ++t) {
      logits.push_back(uniform_vec(rng, actions, -2, 2));
      acts.push_back(rng.below(actions));
    }
    const auto adv = uniform_vec(rng, steps, -1, 1);
    const auto ret = uniform_vec(rng, steps, -1, 1);
    auto values = uniform_vec(rng, steps, -1, 1);
    const double beta = 0.01 + 0.1 * rng.uniform();
    const A3cLoss base = a3c_loss(logits, acts, adv, ret, values, beta);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t k = 0; k < actions; ++k) {
        auto up = logits, down = logits;
        up[t][k] += h;
        down[t][k] -= h;
        const double fd = (a3c_loss(up, acts, adv, ret, values, beta).total -
                           a3c_loss(down, acts, adv, ret, values, beta).total) / (2 * h);
        CHECK(rel(base.dlogits[t][k], fd) < 1e-6);
      }
      auto up = values, down = values;
      up[t] += h;
      down[t] -= h;
      const double fd = (a3c_loss(logits, acts, adv, ret, up, beta).total -
                         a3c_loss(logits, acts, adv, ret, down, beta).total) / (2 * h);
      CHECK(rel(base.dvalues[t], fd) < 1e-6);
    }
    CHECK(base.total == doctest::Approx(base.policy + base.value - beta * base.entropy));

    const std::size_t expert = rng.below(actions);
    const ImitationLoss il = imitation_loss(logits[0], expert);
    for (std::size_t k = 0; k < actions; ++k) {
      auto up = logits[0], down = logits[0];
      up[k] += h;
      down[k] -= h;
      const double fd = (imitation_loss(up, expert).loss - imitation_loss(down, expert).loss) / (2 * h);
      CHECK(rel(il.dlogits[k], fd) < 1e-6);
    }
  }
}

TEST_CASE("Adam first step moves by the learning rate") {
  std::vector<double> params{1.0, -2.0, 0.5};
  const std::vector<double> grads{0.3, -4.0, 0.0};
  AdamState state;
  const AdamConfig cfg{0.01, 0.99, 0.999, 1e-8, true};
  adam_step(params, grads, state, cfg);
  CHECK(params[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-12));
  CHECK(params[1] == doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)).epsilon(1e-12));
  CHECK(params[2] == 0.5);
  CHECK(state.t == 1);
  // AMSGrad keeps the largest second moment seen.
  const auto before = state.v_max;
  adam_step(params, std::vector<double>{0.0, 0.0, 0.0}, state, cfg);
  CHECK(state.v_max == before);
  CHECK(state.v[1] < state.v_max[1]);
  CHECK_THROWS_AS(adam_step(params, std::vector<double>{1.0}, state, cfg), PreconditionError);
}

TEST_CASE("hindsight relabelling") {
  using goldens::drop;
  using goldens::step;
  auto t = goldens::trace(Stage::kOM, {step(ActionKind::kMoveHandAhead, true), drop(2, 5, {Modality::kBehind})});
  const Target original{Modality::kOnTop, 6, 1};
  const Relabeled r = hindsight_relabel(t, original);
  CHECK(r.target == Target{Modality::kBehind, 2, 5});
  REQUIRE(r.rewards.size() == 2);
  CHECK(r.rewards[0] == -0.01);
  CHECK(r.rewards[1] == 2.99);

  auto contained = goldens::trace(Stage::kOM, {drop(3, 4, {Modality::kContainedIn, Modality::kOnTop})});
  CHECK(hindsight_relabel(contained, original).target.modality == Modality::kContainedIn);

  auto off = goldens::trace(Stage::kOM, {drop(0, 4, {})});
  CHECK_THROWS_AS(hindsight_relabel(off, original), PreconditionError);
  auto good = goldens::trace(Stage::kOM, {drop(3, 4, {Modality::kOnTop})});
  good.steps[0].placement->success = true;
  CHECK_THROWS_AS(hindsight_relabel(good, original), PreconditionError);
  auto none = goldens::trace(Stage::kOM, {step(ActionKind::kMoveHandAhead, true)});
  CHECK_THROWS_AS(hindsight_relabel(none, original), PreconditionError);
}

TEST_CASE("learned agent completes games") {
  const auto scene = support::room9();
  auto policy = std::make_shared<const LinearPolicy>(LinearPolicy::zeros());
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    LearnedAgent hider(policy, std::make_shared<HideEvaluator>(), {4, 100, 0.2});
    LearnedAgent seeker(policy, std::make_shared<HideEvaluator>(), {4, 100, 0.2});
    GameState g = start_game(scene, GoalType::kCup, seed);
    Rng rng(seed);
    play_game(g, hider, seeker, rng);
    CHECK(g.finished);
    CHECK(g.stage == Stage::kS);
    CHECK(g.hidden.has_value());
    CHECK(g.em_t == 200);
  }
}

TEST_CASE("training logs are reproducible") {
  LearnerConfig cfg;
  cfg.limits = GameLimits{40, 10, 8, 20, 60};
  cfg.percentile_rollouts = 10;
  const std::vector<std::shared_ptr<const Scene>> scenes{support::room9()};
  const TrainResult a = train(cfg, scenes, 4, 99);
  const TrainResult b = train(cfg, scenes, 4, 99);
  CHECK(a.log == b.log);
  CHECK(a.policy == b.policy);
  REQUIRE(a.log.size() == 4);
  const auto j = nlohmann::json::parse(a.log[0]);
  for (const char* key : {"episode", "scene", "goal", "em", "oh", "om", "s", "ps"}) CHECK(j.contains(key));
  CHECK(j["em"]["coverage"].get<double>() >= 0.0);
  CHECK(j["em"]["coverage_plus"].get<double>() >= j["em"]["coverage"].get<double>());
  CHECK_FALSE(a.policy == LinearPolicy::zeros());
  const TrainResult c = train(cfg, scenes, 4, 100);
  CHECK(c.log != a.log);
}
