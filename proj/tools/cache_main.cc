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

// Command line front end: scene generation, spot labelling, matches,
// evaluation, training, the seriation dataset and the play server.

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridcache/error.h"
#include "gridcache/harness.h"
#include "gridcache/learner.h"
#include "gridcache/playserver.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace gridcache;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out = ".";
};

json load_config(const Globals& g) {
  if (g.config.empty()) return json::object();
  return json::parse(read_file(g.config));
}

GameLimits limits_from(const json& cfg) {
  GameLimits l;
  if (!cfg.contains("limits")) return l;
  const json& j = cfg["limits"];
  l.em = j.value("em", l.em);
  l.ps_tries = j.value("ps", l.ps_tries);
  l.oh = j.value("oh", l.oh);
  l.om = j.value("om", l.om);
  l.s = j.value("s", l.s);
  return l;
}

std::vector<std::shared_ptr<const Scene>> load_scenes(const std::string& path) {
  std::vector<std::string> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.path().extension() == ".scene") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<std::shared_ptr<const Scene>> out;
  for (const auto& f : files) out.push_back(std::make_shared<const Scene>(build_scene(read_file(f))));
  if (out.empty()) throw Error("no .scene files in '" + path + "'");
  return out;
}

SceneIndex index_of(const std::vector<std::shared_ptr<const Scene>>& scenes) {
  SceneIndex idx;
  for (const auto& s : scenes) idx[s->id()] = s;
  return idx;
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return (fs::path(g.out) / name).string();
}

GoalType parse_goal(const std::string& s) {
  const auto g = goal_type_from_string(s);
  if (!g) throw Error("unknown goal type '" + s + "'");
  return *g;
}

std::unique_ptr<Policy> policy_named(const std::string& name, const std::string& policy_file) {
  if (name == "learned") {
    if (policy_file.empty()) throw Error("'learned' needs --policy");
    auto p = std::make_shared<const LinearPolicy>(parse_policy(read_file(policy_file)));
    return std::make_unique<LearnedAgent>(p, std::make_shared<HideEvaluator>(), RolloutConfig{8, 200, 0.2});
  }
  auto p = make_policy(name);
  if (!p) throw Error("unknown policy '" + name + "'");
  return p;
}

std::atomic<bool> g_stop{false};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-world Cache: hide-and-seek with objects"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  // gen-scenes
  auto* gen = app.add_subcommand("gen-scenes", "Generate procedural scene files");
  int gen_count = 10;
  std::string gen_prefix = "gen";
  gen->add_option("--count", gen_count)->capture_default_str();
  gen->add_option("--prefix", gen_prefix)->capture_default_str();

  // spots
  auto* spots = app.add_subcommand("spots", "Enumerate and label hiding spots");
  std::string spots_scenes;
  std::string spots_goal = "cup";
  bool spots_all = false;
  int spots_per_set = 20;
  spots->add_option("--scenes", spots_scenes, "Scene file or directory")->required();
  spots->add_option("--goal", spots_goal)->capture_default_str();
  spots->add_option("--per-set", spots_per_set)->capture_default_str();
  spots->add_flag("--all", spots_all, "Write every spot, not only the sampled sets");

  // play
  auto* play = app.add_subcommand("play", "Play one match and write its report");
  std::string play_scene, play_hider = "random", play_seeker = "oracle", play_goal = "cup", play_policy;
  play->add_option("--scene", play_scene)->required();
  play->add_option("--hider", play_hider)->capture_default_str();
  play->add_option("--seeker", play_seeker)->capture_default_str();
  play->add_option("--goal", play_goal)->capture_default_str();
  play->add_option("--policy", play_policy, "Policy file for 'learned'");

  // eval
  auto* eval = app.add_subcommand("eval", "Seeker find rates over labelled spot sets");
  std::string eval_scenes, eval_spots, eval_seeker = "explorer", eval_policy;
  int eval_trials = 1;
  eval->add_option("--scenes", eval_scenes)->required();
  eval->add_option("--spots", eval_spots)->required();
  eval->add_option("--seeker", eval_seeker)->capture_default_str();
  eval->add_option("--trials", eval_trials)->capture_default_str();
  eval->add_option("--policy", eval_policy);

  // train
  auto* train_cmd = app.add_subcommand("train", "Self-play training");
  std::string train_scenes;
  int train_episodes = 100, train_workers = 1;
  train_cmd->add_option("--scenes", train_scenes)->required();
  train_cmd->add_option("--episodes", train_episodes)->capture_default_str();
  train_cmd->add_option("--workers", train_workers)->capture_default_str();

  // seriation
  auto* ser = app.add_subcommand("seriation", "Free-space seriation dataset");
  std::string ser_scenes;
  ser->add_option("--scenes", ser_scenes)->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Play service for human trials");
  std::string serve_scenes, serve_opponents, serve_policy, serve_host = "127.0.0.1";
  int serve_port = 8080, serve_frame_port = 0;
  serve->add_option("--scenes", serve_scenes)->required();
  serve->add_option("--opponents", serve_opponents, "Spot file for spots opponents");
  serve->add_option("--policy", serve_policy, "Policy file for the learned opponent");
  serve->add_option("--host", serve_host)->capture_default_str();
  serve->add_option("--port", serve_port, "HTTP port")->capture_default_str();
  serve->add_option("--frame-port", serve_frame_port, "Length-prefixed TCP port (0 = off)");

  CLI11_PARSE(app, argc, argv);

  try {
    const json cfg = load_config(g);
    const GameLimits limits = limits_from(cfg);
    Rng rng(g.seed);

    if (*gen) {
      for (int k = 0; k < gen_count; ++k) {
        char id[64];
        std::snprintf(id, sizeof id, "%s-%03d", gen_prefix.c_str(), k);
        const Scene s = generate_scene(id, rng);
        write_file_atomic(out_path(g, std::string(id) + ".scene"), serialize_scene(s));
      }
      std::cout << "wrote " << gen_count << " scenes to " << g.out << "\n";
    } else if (*spots) {
      const GoalType goal = parse_goal(spots_goal);
      std::vector<HidingSpot> all;
      for (const auto& scene : load_scenes(spots_scenes)) {
        LabeledSpots ls = label_difficulty(enumerate_spots(*scene, goal), rng,
                                           static_cast<std::size_t>(spots_per_set));
        if (spots_all) {
          all.insert(all.end(), ls.spots.begin(), ls.spots.end());
          continue;
        }
        for (const auto* set : {&ls.easy, &ls.medium, &ls.hard}) {
          for (std::size_t k : *set) all.push_back(ls.spots[k]);
        }
      }
      write_file_atomic(out_path(g, "spots.txt"), serialize_spots(all));
      std::cout << "wrote " << all.size() << " spots\n";
    } else if (*play) {
      auto scene = std::make_shared<const Scene>(build_scene(read_file(play_scene)));
      auto hider = policy_named(play_hider, play_policy);
      auto seeker = policy_named(play_seeker, play_policy);
      const MatchReport rep = run_match(scene, parse_goal(play_goal), *hider, *seeker, g.seed, limits);
      const std::string path = out_path(g, "report.json");
      write_file_atomic(path, serialize_report(rep));
      std::cout << "outcome " << format_outcome(rep.outcome) << " found " << (rep.found ? "yes" : "no")
                << " seeker_steps " << rep.seeker_steps << "\nreport " << path << "\n";
    } else if (*eval) {
      const auto scenes = load_scenes(eval_scenes);
      const auto all = parse_spots(read_file(eval_spots));
      std::vector<SpotSet> sets;
      for (Difficulty d : {Difficulty::kEasy, Difficulty::kMedium, Difficulty::kHard}) {
        SpotSet set{std::string(to_string(d)), {}};
        for (const auto& s : all) {
          if (s.difficulty == d) set.spots.push_back(s);
        }
        if (!set.spots.empty()) sets.push_back(std::move(set));
      }
      const auto rows = evaluate(
          sets, index_of(scenes), [&] { return policy_named(eval_seeker, eval_policy); }, eval_trials, g.seed,
          limits);
      json out = json::array();
      std::cout << "set      games  found  rate    95% CI            mean steps\n";
      for (const EvalRow& r : rows) {
        std::printf("%-8s %5d  %5d  %.3f  [%.3f, %.3f]  %.1f [%.1f, %.1f]\n", r.label.c_str(), r.games, r.found,
                    r.find_rate, r.find_ci.lo, r.find_ci.hi, r.mean_steps, r.steps_ci.lo, r.steps_ci.hi);
        out.push_back({{"set", r.label},
                       {"games", r.games},
                       {"found", r.found},
                       {"find_rate", r.find_rate},
                       {"find_ci", {r.find_ci.lo, r.find_ci.hi}},
                       {"mean_steps", r.mean_steps},
                       {"steps_ci", {r.steps_ci.lo, r.steps_ci.hi}}});
      }
      write_file_atomic(out_path(g, "eval.json"), out.dump(2) + "\n");
    } else if (*train_cmd) {
      LearnerConfig lc;
      lc.limits = limits;
      lc.workers = train_workers;
      if (cfg.contains("learner")) {
        const json& j = cfg["learner"];
        lc.gamma = j.value("gamma", lc.gamma);
        lc.gamma_oh = j.value("gamma_oh", lc.gamma_oh);
        lc.tau = j.value("tau", lc.tau);
        lc.beta = j.value("beta", lc.beta);
        lc.lr = j.value("lr", lc.lr);
        lc.lr_ps = j.value("lr_ps", lc.lr_ps);
        lc.n_step = j.value("n_step", lc.n_step);
      }
      const auto scenes = load_scenes(train_scenes);
      std::string log;
      const TrainResult res = train(lc, scenes, train_episodes, g.seed, [&](const std::string& line) {
        log += line + "\n";
      });
      write_file_atomic(out_path(g, "train.jsonl"), log);
      write_file_atomic(out_path(g, "policy.txt"), serialize_policy(res.policy));
      std::cout << "trained " << train_episodes << " episodes; policy " << out_path(g, "policy.txt") << "\n";
    } else if (*ser) {
      const auto data = seriation_dataset(load_scenes(ser_scenes), rng);
      std::string out;
      for (const auto& e : data) {
        json poses = json::array();
        for (const Pose& p : e.poses) poses.push_back({p.x, p.z, degrees(p.rotation), p.standing});
        out += json{{"scene", e.scene_id}, {"poses", poses}, {"counts", e.counts}, {"label", e.label}}.dump() + "\n";
      }
      write_file_atomic(out_path(g, "seriation.jsonl"), out);
      std::cout << "wrote " << data.size() << " examples\n";
    } else if (*serve) {
      ServiceConfig sc;
      if (!serve_opponents.empty()) sc.spots = parse_spots(read_file(serve_opponents));
      if (!serve_policy.empty()) {
        sc.learned = std::make_shared<const LinearPolicy>(parse_policy(read_file(serve_policy)));
      }
      if (const char* dir = std::getenv("CACHE_TRIAL_LOG_DIR")) sc.log_dir = dir;
      PlayService service(index_of(load_scenes(serve_scenes)), std::move(sc));
      HttpServer http(service);
      const int port = http.start(serve_host, serve_port);
      std::cout << "http on " << serve_host << ":" << port << "\n";
      std::unique_ptr<FrameServer> frames;
      if (serve_frame_port > 0) {
        frames = std::make_unique<FrameServer>(service);
        std::cout << "frames on " << serve_host << ":" << frames->start(serve_host, serve_frame_port) << "\n";
      }
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      if (frames) frames->stop();
      http.stop();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
