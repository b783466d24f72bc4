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

#ifndef GRIDCACHE_AGENT_H_
#define GRIDCACHE_AGENT_H_

// Stage-policy interface and the game loop that drives a hider and a seeker.

#include <memory>
#include <string>

#include "gridcache/gamecore.h"
#include "gridcache/rng.h"

namespace gridcache {

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  // Called once before the first action of a game.
  virtual void begin(const GameState& /*state*/, Rng& /*rng*/) {}
  virtual Action act(const GameState& state, Rng& rng) = 0;
  // Called after every action this policy took.
  virtual void observe(const GameState& /*state*/, const StepResult& /*result*/) {}
};

// Plays until the game finishes: the hider acts in E&M, PS, OH and OM, the
// seeker in S. An illegal action is recorded as a failed step.
void play_game(GameState& state, Policy& hider, Policy& seeker, Rng& rng);

// Plays only the S stage of a game already in S.
void play_seeking(GameState& state, Policy& seeker, Rng& rng);

}  // namespace gridcache

#endif  // GRIDCACHE_AGENT_H_
