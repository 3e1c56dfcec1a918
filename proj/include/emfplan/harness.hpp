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
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "emfplan/baselines.hpp"
#include "emfplan/dqn_agent.hpp"
#include "emfplan/npe_gan.hpp"

namespace emfplan {

/// 16 hex digits of FNV-1a over the canonical (key-sorted) JSON dump.
std::string config_hash(const nlohmann::json& config);

double median(std::vector<double> v);

/// Dataset + GAN training settings shared by the ablation and the model comparison.
struct GanProfile {
  std::string name = "toy";
  DatasetOptions data;  // grid, sample count, scene statistics
  double val_ratio = 0.1;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<int> filters{32, 128, 256};  // nominal first-layer widths
  /// Nominal widths are divided by this (desk-scale profiles).
  int width_divisor = 16;
  int disc_filters = 64;
  int regressor_filters = 64;  // nominal; divided like the generator
  GanTrainConfig train;

  static GanProfile toy();
  static GanProfile full();
  int effective(int nominal) const { return std::max(1, nominal / std::max(1, width_divisor)); }
  int depth() const;
  nlohmann::json to_json() const;
};

struct PreparedData {
  std::vector<Sample> train;      // base train samples
  std::vector<Sample> train_aug;  // train plus its horizontal and vertical flips
  std::vector<Sample> test;       // base held-out samples
};

/// Loads `dir` when it holds a manifest generated with the same options,
/// otherwise generates it first.
PreparedData prepare_data(const GanProfile& p, const std::filesystem::path& dir);

struct SeedScores {
  std::uint64_t seed = 0;
  EvalReport trained;
  std::optional<EvalReport> untrained;
  double train_seconds = 0.0;
};

struct ModelCell {
  std::string model;  // npe_gan | unet_regressor | conv_autoencoder
  bool augmented = true;
  int nominal_filters = 0;
  int effective_filters = 0;
  std::vector<SeedScores> seeds;

  double median_mae(MapChannel ch) const;
  double median_untrained_mae(MapChannel ch) const;
  nlohmann::json to_json() const;
};

struct AblationReport {
  nlohmann::json config;
  std::string hash;
  std::vector<ModelCell> cells;  // {aug, no-aug} x filters

  const ModelCell& cell(bool augmented, int nominal_filters) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct ComparisonReport {
  nlohmann::json config;
  std::string hash;
  std::vector<ModelCell> cells;  // npe_gan, unet_regressor, conv_autoencoder

  const ModelCell& cell(const std::string& model) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct AblationOptions {
  bool include_no_aug = true;
  /// Restrict the no-aug row to these nominal widths (empty = all).
  std::vector<int> no_aug_filters;
  bool record_untrained = true;
  /// Saves the generator of every run here when set.
  std::optional<std::filesystem::path> checkpoint_dir;
};

AblationReport run_ablation(const GanProfile& p, const PreparedData& data, const AblationOptions& opts = {});

/// NPE-GAN (largest width, augmented) against the two regression baselines.
/// Reuses the GAN cell from `ablation` when it has one.
ComparisonReport run_model_comparison(const GanProfile& p, const PreparedData& data,
                                      const AblationReport* ablation = nullptr);

struct PlacementProfile {
  int grid_size = 32;
  double side_length_m = 800.0;
  int n_buildings = 30;
  BuildingSizeRange building_size{2, 4};
  std::vector<std::uint64_t> scene_seeds{9000, 9001, 9002};
  std::vector<int> n_bs{1, 2};
  int candidate_stride = 4;
  int random_trials = 1;
  EnvConfig env;  // stride and budget are overridden per run
  DqnConfig dqn;
  BruteForceOptions brute;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct PlacementRow {
  std::uint64_t scene_seed = 0;
  int n_bs = 1;
  PlacementResult brute;
  PlacementResult random;
  PlacementResult dqn;
  double dqn_train_seconds = 0.0;
  std::vector<EpisodeLog> curve;

  bool sandwich() const;
};

struct PlacementReport {
  nlohmann::json config;
  std::string hash;
  std::string predictor;
  std::vector<PlacementRow> rows;

  double mean_cr(const std::string& method, int n_bs) const;
  /// Mean brute-force time over mean DQN inference time.
  double time_ratio(int n_bs) const;
  double max_dqn_inference_s() const;
  bool sandwich_holds() const;
  /// min over scenes of CR(dqn) / CR(brute) at this budget.
  double min_dqn_bf_ratio(int n_bs) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Makes the predictor for each scene; the default is the direct oracle.
using PredictorFactory = std::function<std::shared_ptr<const Predictor>()>;

PlacementReport run_placement_comparison(const PlacementProfile& p, const PredictorFactory& make_predictor = {});

SceneSpec placement_scene(const PlacementProfile& p, std::uint64_t scene_seed);

}  // namespace emfplan
