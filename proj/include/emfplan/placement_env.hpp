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

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emfplan/metrics.hpp"
#include "emfplan/predictor.hpp"
#include "emfplan/scene.hpp"

namespace emfplan {

struct EnvConfig {
  int n_bs_budget = 1;
  Thresholds thresholds;
  double penalty = -0.1;
  int candidate_stride = 4;

  void validate() const;
};

struct DeploymentState {
  BinaryGrid coverage_channel;  // C indicator of the current deployment
  BinaryGrid building_channel;  // 1 outdoor, 0 building
  std::vector<Pixel> deployed;  // pre-deployed first, then placements in order
  std::size_t n_pre_deployed = 0;
  int budget_remaining = 0;
  double cr = 0.0;
  double er = 1.0;

  friend bool operator==(const DeploymentState&, const DeploymentState&) = default;
};

struct Evaluation {
  double cr = 0.0;
  double er = 1.0;
  bool feasible = true;  // er >= lambda
};

struct StepResult {
  DeploymentState next;
  double reward = 0.0;
  bool terminal = false;
  /// Terminal because no legal action is left (no extra penalty applied).
  bool infeasible_terminal = false;
  Evaluation eval;
};

/// reward = CR when ER >= lambda, otherwise `penalty`.
double gated_reward(double cr, double er, const Thresholds& t, double penalty = -0.1);

/// Sum of gamma^k r_k.
double episode_return(std::span<const double> rewards, double gamma);

/// Sequential BS deployment over a fixed scene. Transitions are pure
/// functions of (state, action) given a deterministic predictor.
class PlacementEnv {
 public:
  PlacementEnv(SceneSpec scene, std::shared_ptr<const Predictor> predictor, EnvConfig config,
               std::optional<BinaryGrid> deploy_mask = std::nullopt);

  const SceneSpec& scene() const noexcept { return scene_; }
  const EnvConfig& config() const noexcept { return config_; }
  const DeployableSet& lattice() const noexcept { return lattice_; }
  const Predictor& predictor() const noexcept { return *predictor_; }
  std::size_t n_actions() const noexcept { return lattice_.size(); }
  Pixel action_pixel(std::size_t a) const { return lattice_.candidates().at(a); }
  const BinaryGrid& outdoor() const noexcept { return outdoor_; }

  DeploymentState reset(std::span<const Pixel> pre_deployed = {}) const;
  std::vector<std::uint8_t> action_mask(const DeploymentState& s) const;
  bool has_legal_action(const DeploymentState& s) const;

  /// Throws IllegalAction for a masked or out-of-range action.
  StepResult step(const DeploymentState& s, std::size_t action) const;

  /// CR / ER of the given site set over outdoor pixels.
  Evaluation evaluate(std::span<const Pixel> sites) const;
  Evaluation evaluate_maps(const RadioMaps& maps) const;

 private:
  SceneSpec scene_;
  std::shared_ptr<const Predictor> predictor_;
  EnvConfig config_;
  DeployableSet lattice_;
  BinaryGrid outdoor_;
};

struct TraceRecord {
  int step = 0;
  std::size_t action = 0;
  Pixel site;
  double cr = 0.0;
  double er = 0.0;
  double reward = 0.0;
};

/// One JSON object per line: {step, action, row, col, CR, ER, reward}.
std::string trace_to_jsonl(std::span<const TraceRecord> trace);
void write_trace(const std::filesystem::path& path, std::span<const TraceRecord> trace);

}  // namespace emfplan
