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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and sizes are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridcache/harness.h"
#include "gridcache/learner.h"
#include "gridcache/perspective.h"
#include "gridcache/rewards.h"
#include "oracles.h"
#include "reward_goldens.h"
#include "support.h"

using namespace gridcache;

namespace {

constexpr double kGaeTol = 1e-12;
constexpr double kGradRelTol = 1e-6;
constexpr double kHtTol = 1e-10;
constexpr double kSigmas = 3.0;
constexpr int kSamplingDraws = 100000;
constexpr int kBfsScenes = 50;
constexpr int kLadderTrials = 100;
constexpr int kHtRows = 200;
constexpr int kGradInstances = 100;
constexpr int kRandomWalks = 1000;
constexpr int kTrendScenes = 30;
constexpr int kTrendSpotsPerScene = 60;
constexpr double kTrendEpsilon = 0.2;
constexpr int kTrainEpisodes = 2000;
constexpr int kEvalEpisodes = 100;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Verdict()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Verdict reward_goldens() {
  int bad = 0, n = 0;
  std::string first;
  for (const goldens::Case& c : goldens::all()) {
    ++n;
    if (c.got != c.want) {
      if (bad++ == 0) first = fmt(" first: %s got %.17g want %.17g", c.name.c_str(), c.got, c.want);
    }
  }
  return {bad == 0, fmt("%d cases, %d mismatches", n, bad) + first};
}

Verdict bfs_equivalence() {
  const auto scenes = support::generated(kBfsScenes, 2024, 10);
  int compared = 0, bad = 0;
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    const Scene& s = *scenes[k];
    const GoalType goal = kAllGoalTypes[k % kAllGoalTypes.size()];
    const Cell start = s.start_pose().cell();
    for (const HidingSpot& spot : enumerate_spots(s, goal)) {
      const BfsResult r = bfs_seek(s, spot.placement(), start);
      const oracle::Seek o = oracle::bfs_seek(s.description(), spot.placement(), start);
      ++compared;
      if (r.found != o.found || r.steps != o.steps) ++bad;
    }
  }
  return {bad == 0 && compared > 0, fmt("%d spots on %d scenes, %d mismatches", compared, kBfsScenes, bad)};
}

Verdict difficulty_labels() {
  int ladder_bad = 0;
  Rng rng(17);
  for (int trial = 0; trial < kLadderTrials; ++trial) {
    std::vector<HidingSpot> spots(100);
    std::vector<double> v;
    const int grain = trial % 3 == 0 ? 20 : trial % 3 == 1 ? 100 : 100000;
    for (std::size_t k = 0; k < spots.size(); ++k) {
      spots[k].visible_from = static_cast<double>(rng.below(static_cast<std::uint64_t>(grain) + 1)) / grain;
      spots[k].cell = {static_cast<int>(k), 0};
      v.push_back(spots[k].visible_from);
    }
    const auto want = oracle::labels(v);
    Rng pick(static_cast<std::uint64_t>(trial));
    const LabeledSpots got = label_difficulty(spots, pick, 20);
    for (std::size_t k = 0; k < spots.size(); ++k) {
      if (static_cast<int>(*got.spots[k].difficulty) != static_cast<int>(want[k])) ++ladder_bad;
    }
  }
  // Generated corpora: hard + medium stays within 20% plus the ties at the
  // 20th percentile.
  int corpus_bad = 0;
  double worst = -1.0;
  const auto scenes = support::generated(30, 99, 15);
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    auto spots = enumerate_spots(*scenes[k], kAllGoalTypes[k % kAllGoalTypes.size()]);
    if (spots.empty()) continue;
    std::vector<double> v;
    for (const auto& s : spots) v.push_back(s.visible_from);
    const double q20 = oracle::rank_value(v, 20);
    const auto ties = std::count(v.begin(), v.end(), q20);
    Rng pick(k);
    const LabeledSpots got = label_difficulty(spots, pick, 20);
    std::size_t hm = 0;
    for (const auto& s : got.spots) hm += s.difficulty != Difficulty::kEasy;
    const double frac = static_cast<double>(hm) / static_cast<double>(v.size());
    const double limit = 0.20 + static_cast<double>(ties) / static_cast<double>(v.size());
    worst = std::max(worst, frac - limit);
    if (frac > limit) ++corpus_bad;
  }
  return {ladder_bad == 0 && corpus_bad == 0,
          fmt("%d ladders, %d label mismatches; 30 corpora, %d over the cap (worst margin %+.3f)", kLadderTrials,
              ladder_bad, corpus_bad, worst)};
}

Verdict ht_unbiased() {
  Rng rng(5);
  double worst = 0.0;
  for (int row = 0; row < kHtRows; ++row) {
    const std::size_t m = 3 + rng.below(6);  // 3..8 outcomes
    std::vector<double> logits(m), mu(m);
    for (std::size_t e = 0; e < m; ++e) {
      logits[e] = 4.0 * (rng.uniform() - 0.5);
      mu[e] = 500.0 * rng.uniform();
    }
    const auto p = oracle::softmax(logits);
    double truth = 0.0;
    for (std::size_t e = 0; e < m; ++e) truth += p[e] * mu[e];
    double expect = 0.0;
    for (const auto& [seq, prob] : oracle::ordered_draws(p, 3)) {
      const auto w = ht_weights(p, seq);
      double est = 0.0;
      for (std::size_t j = 0; j < seq.size(); ++j) est += w[j] * mu[static_cast<std::size_t>(seq[j])];
      expect += prob * est;
    }
    worst = std::max(worst, std::abs(expect - truth));
  }
  return {worst <= kHtTol, fmt("%d rows, max |E - truth| = %.3g (tol %.0e)", kHtRows, worst, kHtTol)};
}

Verdict sampling_laws() {
  Rng rng(1);
  const std::vector<double> mu{12.0, 40.0, 65.0, 80.0, 25.0, 50.0, 71.0, 5.0};
  const std::vector<double> logits{0.3, -1.0, 2.0, 0.0, 1.1, -0.4, 0.7, -2.2, 1.5, 0.1};
  const auto p = oracle::softmax(mu, 0.04);
  const auto q = oracle::softmax(logits);
  std::vector<int> pose_counts(mu.size()), first_counts(logits.size());
  for (int k = 0; k < kSamplingDraws; ++k) ++pose_counts[choose_hide_pose(mu, rng)];
  for (int k = 0; k < kSamplingDraws; ++k) ++first_counts[static_cast<std::size_t>(sample_outcomes(logits, 3, rng)[0])];
  double worst = 0.0;
  auto z = [&](const std::vector<int>& counts, const std::vector<double>& probs) {
    for (std::size_t e = 0; e < probs.size(); ++e) {
      const double sd = std::sqrt(kSamplingDraws * probs[e] * (1.0 - probs[e]));
      worst = std::max(worst, std::abs(counts[e] - kSamplingDraws * probs[e]) / sd);
    }
  };
  z(pose_counts, p);
  z(first_counts, q);
  return {worst <= kSigmas, fmt("%d draws each, max deviation %.2f sigma (limit %.0f)", kSamplingDraws, worst, kSigmas)};
}

Verdict gae_and_gradients() {
  Rng rng(9);
  double gae_worst = 0.0, grad_worst = 0.0;
  const double h = 1e-6;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); };
  auto vec = [&](std::size_t n, double lo, double hi) {
    std::vector<double> x(n);
    for (double& v : x) v = lo + (hi - lo) * rng.uniform();
    return x;
  };
  for (int n = 0; n < kGradInstances; ++n) {
    const std::size_t len = 1 + rng.below(60);
    const auto r = vec(len, -1, 3);
    const auto v = vec(len, -2, 2);
    const double gamma = 0.8 + 0.2 * rng.uniform(), tau = rng.uniform(), boot = rng.uniform() - 0.5;
    const auto got = gae(r, v, gamma, tau, boot);
    const auto want = oracle::gae(r, v, gamma, tau, boot);
    for (std::size_t t = 0; t < len; ++t) gae_worst = std::max(gae_worst, std::abs(got[t] - want[t]));

    const std::size_t steps = 1 + rng.below(6), actions = 2 + rng.below(12);
    std::vector<std::vector<double>> logits;
    std::vector<std::size_t> acts;
    for (std::size_t t = 0; t < steps; ++t) {
      logits.push_back(vec(actions, -3, 3));
      acts.push_back(rng.below(actions));
    }
    const auto adv = vec(steps, -1, 1), ret = vec(steps, -1, 1);
    const auto values = vec(steps, -1, 1);
    const double beta = 0.01;
    const A3cLoss base = a3c_loss(logits, acts, adv, ret, values, beta);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t k = 0; k < actions; ++k) {
        auto up = logits, down = logits;
        up[t][k] += h;
        down[t][k] -= h;
        const double fd =
            (a3c_loss(up, acts, adv, ret, values, beta).total - a3c_loss(down, acts, adv, ret, values, beta).total) /
            (2 * h);
        grad_worst = std::max(grad_worst, rel(base.dlogits[t][k], fd));
      }
      auto up = values, down = values;
      up[t] += h;
      down[t] -= h;
      const double fd =
          (a3c_loss(logits, acts, adv, ret, up, beta).total - a3c_loss(logits, acts, adv, ret, down, beta).total) /
          (2 * h);
      grad_worst = std::max(grad_worst, rel(base.dvalues[t], fd));
    }
    const std::size_t expert = rng.below(actions);
    const ImitationLoss il = imitation_loss(logits[0], expert);
    for (std::size_t k = 0; k < actions; ++k) {
      auto up = logits[0], down = logits[0];
      up[k] += h;
      down[k] -= h;
      const double fd = (imitation_loss(up, expert).loss - imitation_loss(down, expert).loss) / (2 * h);
      grad_worst = std::max(grad_worst, rel(il.dlogits[k], fd));
    }
  }
  return {gae_worst <= kGaeTol && grad_worst <= kGradRelTol,
          fmt("%d instances, GAE max error %.3g (tol %.0e), gradient max rel error %.3g (tol %.0e)", kGradInstances,
              gae_worst, kGaeTol, grad_worst, kGradRelTol)};
}

Verdict metrics_invariants() {
  auto scenes = support::generated(19, 7, 12);
  scenes.push_back(support::room9());
  ReportConfig cfg;
  cfg.percentile_rollouts = 4;
  const GameLimits limits{100, 10, 15, 50, 60};
  int bad_order = 0, out_of_range = 0;
  auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
  for (int k = 0; k < kRandomWalks; ++k) {
    const auto& scene = scenes[static_cast<std::size_t>(k) % scenes.size()];
    RandomPolicy hider, seeker;
    const MatchReport r = run_match(scene, kAllGoalTypes[static_cast<std::size_t>(k) % kAllGoalTypes.size()], hider,
                                    seeker, static_cast<std::uint64_t>(k + 1), limits, cfg);
    if (!r.exploration || !r.hiding) {
      ++out_of_range;
      continue;
    }
    const ExplorationMetrics& e = *r.exploration;
    const HidingMetrics& h = *r.hiding;
    if (e.coverage_plus < e.coverage) ++bad_order;
    const double seek = static_cast<double>(r.seeker_steps) / limits.s;
    for (double x : {e.coverage, e.coverage_plus, e.open_pct, h.visible_from_pct, h.bfs_steps_pct, seek}) {
      if (!in01(x)) ++out_of_range;
    }
  }
  // Seriation labels against free space recomputed by the reference.
  const auto ser_scenes = support::generated(20, 8, 15);
  Rng rng(3);
  const auto data = seriation_dataset(ser_scenes, rng);
  std::map<std::string, const SceneDescription*> desc;
  for (const auto& s : ser_scenes) desc[s->id()] = &s->description();
  int bad_labels = 0;
  for (const SeriationExample& ex : data) {
    const std::size_t t = ex.poses.size() - 1;
    const int now = oracle::free_space(*desc[ex.scene_id], ex.poses[t]);
    const int before = oracle::free_space(*desc[ex.scene_id], ex.poses[t - 1]);
    if (ex.label != (now > before)) ++bad_labels;
  }
  return {bad_order == 0 && out_of_range == 0 && bad_labels == 0 && !data.empty(),
          fmt("%d walks: %d coverage+ < coverage, %d values outside [0,1]; %zu seriation examples, %d label mismatches",
              kRandomWalks, bad_order, out_of_range, data.size(), bad_labels)};
}

Verdict trend() {
  const auto scenes = support::generated(kTrendScenes, 31337, 15);
  SceneIndex index;
  std::vector<SpotSet> sets{{"easy", {}}, {"medium", {}}, {"hard", {}}};
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    index[scenes[k]->id()] = scenes[k];
    Rng pick(k);
    const LabeledSpots l = label_difficulty(enumerate_spots(*scenes[k], kAllGoalTypes[k % kAllGoalTypes.size()]),
                                            pick, kTrendSpotsPerScene / 3);
    for (std::size_t i : l.easy) sets[0].spots.push_back(l.spots[i]);
    for (std::size_t i : l.medium) sets[1].spots.push_back(l.spots[i]);
    for (std::size_t i : l.hard) sets[2].spots.push_back(l.spots[i]);
  }
  const auto rows = evaluate(sets, index, [] { return std::make_unique<ExploringSeeker>(kTrendEpsilon); }, 1, 5);
  // Ordered by point estimate, or overlapping intervals where not.
  auto ok = [](const EvalRow& hi, const EvalRow& lo) {
    return hi.find_rate >= lo.find_rate || hi.find_ci.lo <= lo.find_ci.hi;
  };
  std::string detail;
  for (const auto& r : rows) {
    detail += fmt("%s %d/%d [%.3f, %.3f] mean steps %.1f; ", r.label.c_str(), r.found, r.games, r.find_ci.lo,
                  r.find_ci.hi, r.mean_steps);
  }
  return {ok(rows[0], rows[1]) && ok(rows[1], rows[2]) && ok(rows[0], rows[2]), detail};
}

double mean_coverage(Policy& hider, const std::shared_ptr<const Scene>& scene, const GameLimits& limits) {
  ReportConfig cfg;
  cfg.percentile_rollouts = 1;
  double total = 0.0;
  for (int k = 0; k < kEvalEpisodes; ++k) {
    RandomPolicy seeker;
    const MatchReport r = run_match(scene, kAllGoalTypes[static_cast<std::size_t>(k) % kAllGoalTypes.size()], hider,
                                    seeker, 100000 + static_cast<std::uint64_t>(k), limits, cfg);
    total += r.exploration ? r.exploration->coverage : 0.0;
  }
  return total / kEvalEpisodes;
}

Verdict learner_smoke() {
  const auto scene = support::room9();
  LearnerConfig cfg;
  const TrainResult trained = train(cfg, {scene}, kTrainEpisodes, 1);
  const GameLimits eval_limits{cfg.limits.em, cfg.limits.ps_tries, cfg.limits.oh, cfg.limits.om, 20};
  auto policy = std::make_shared<const LinearPolicy>(trained.policy);
  LearnedAgent learned(policy, std::make_shared<HideEvaluator>(trained.evaluator), cfg.ps_rollouts);
  RandomPolicy random;
  const double got = mean_coverage(learned, scene, eval_limits);
  const double base = mean_coverage(random, scene, eval_limits);
  return {got > base, fmt("%d episodes; E&M coverage learned %.4f vs random %.4f over %d eval games", kTrainEpisodes,
                          got, base, kEvalEpisodes)};
}

Verdict determinism() {
  int bad = 0, n = 0;
  const auto scenes = support::generated(4, 12, 12);
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    for (const char* seeker_name : {"explorer", "egreedy"}) {
      auto h1 = make_policy("random"), h2 = make_policy("random");
      auto s1 = make_policy(seeker_name), s2 = make_policy(seeker_name);
      const GoalType goal = kAllGoalTypes[k % kAllGoalTypes.size()];
      const auto a = serialize_report(run_match(scenes[k], goal, *h1, *s1, 40 + k));
      const auto b = serialize_report(run_match(scenes[k], goal, *h2, *s2, 40 + k));
      ++n;
      if (a != b) ++bad;
    }
  }
  LearnerConfig cfg;
  cfg.limits = GameLimits{80, 10, 15, 50, 100};
  cfg.percentile_rollouts = 20;
  const auto log_a = train(cfg, {support::room9(), scenes[0]}, 12, 77).log;
  const auto log_b = train(cfg, {support::room9(), scenes[0]}, 12, 77).log;
  const bool logs_equal = log_a == log_b;
  return {bad == 0 && logs_equal,
          fmt("%d report pairs, %d differ; training logs %s", n, bad, logs_equal ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridcache acceptance checks"};
  std::vector<std::string> only;
  app.add_option("--only", only, "Run only the named criteria");
  bool list = false;
  app.add_flag("--list", list, "List criterion names");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {"reward-goldens", 1, reward_goldens},
      {"bfs-oracle-equivalence", 30, bfs_equivalence},
      {"difficulty-labeling", 60, difficulty_labels},
      {"estimator-unbiasedness", 10, ht_unbiased},
      {"sampling-laws", 60, sampling_laws},
      {"gae-and-gradients", 60, gae_and_gradients},
      {"metrics-invariants", 600, metrics_invariants},
      {"end-to-end-trend", 600, trend},
      {"learner-smoke", 900, learner_smoke},
      {"determinism", 300, determinism},
  };
  if (list) {
    for (const auto& c : criteria) std::cout << c.name << "\n";
    return 0;
  }
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      v.pass = false;
      v.detail += fmt(" (over the %.0f s budget)", c.budget_s);
    }
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.name << " [" << fmt("%.2f", secs) << " s] " << v.detail
              << std::endl;
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
