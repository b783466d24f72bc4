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

#include "gridcache/agent.h"

#include "gridcache/error.h"

namespace gridcache {
namespace {

void act_once(GameState& state, Policy& policy, Rng& rng) {
  const Action a = policy.act(state, rng);
  StepResult result;
  if (is_legal(state.stage, a.kind)) {
    result = apply_action(state, a);
  } else {
    result = fail_action(state, a);
  }
  policy.observe(state, result);
}

}  // namespace

void play_game(GameState& state, Policy& hider, Policy& seeker, Rng& rng) {
  hider.begin(state, rng);
  while (!state.finished && state.stage != Stage::kS) act_once(state, hider, rng);
  play_seeking(state, seeker, rng);
}

void play_seeking(GameState& state, Policy& seeker, Rng& rng) {
  if (state.finished) return;
  if (state.stage != Stage::kS) throw PreconditionError("play_seeking: game is not in S");
  seeker.begin(state, rng);
  while (!state.finished) act_once(state, seeker, rng);
}

}  // namespace gridcache
