// Copyright 2026 The emfplan Authors.
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

#pragma once

#include <nlohmann/json.hpp>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "emfplan/placement_env.hpp"

namespace emfplan {

struct PlacementResult {
  std::string method;
  std::vector<Pixel> placements;  // new sites only, in placement order
  double cr = 0.0;
  double er = 1.0;
  bool feasible = false;
  std::size_t evaluations = 0;
  double wall_time_s = 0.0;
  std::vector<TraceRecord> trace;  // sequential methods only
};

nlohmann::json to_json(const PlacementResult& r);

/// Each trial draws `n_bs` distinct lattice sites (not pre-deployed)
/// uniformly. Returns the best feasible trial by CR, or the best overall
/// when none is feasible; earlier trials win ties.
PlacementResult random_search(const PlacementEnv& env, std::span<const Pixel> pre_deployed, int n_bs,
                              int trials, std::mt19937_64& rng);

struct BruteForceOptions {
  std::size_t candidate_limit = 3000;
  std::size_t batch = 64;
};

/// Exhaustive search over single sites (n_bs = 1) or unordered pairs
/// (n_bs = 2) of the environment's lattice minus pre-deployed sites.
/// Configurations with ER < lambda are excluded; the lowest index (pair)
/// wins ties. If nothing is feasible, the best-CR configuration is returned
/// with feasible = false. Throws SearchTooLarge (with a stride hint) when the
/// lattice exceeds `candidate_limit`.
PlacementResult brute_force(const PlacementEnv& env, std::span<const Pixel> pre_deployed, int n_bs,
                            const BruteForceOptions& opts = {});

/// Smallest lattice stride whose candidate count fits within `limit`.
int stride_for_limit(const SceneSpec& scene, std::size_t limit);

}  // namespace emfplan
