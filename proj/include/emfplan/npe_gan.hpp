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

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "emfplan/dataset.hpp"
#include "emfplan/map_models.hpp"
#include "emfplan/predictor.hpp"

namespace emfplan {

/// Mean BCE of the discriminator on real (target 1) and fake (target 0) patches.
torch::Tensor discriminator_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake);
/// BCE(d_fake, 1) + lambda * mean|y - y_hat|.
torch::Tensor generator_loss(const torch::Tensor& d_fake, const torch::Tensor& y, const torch::Tensor& y_hat,
                             double lambda_l1);

struct GanLosses {
  torch::Tensor d_loss;
  torch::Tensor g_loss;
};
GanLosses cgan_losses(const torch::Tensor& d_real, const torch::Tensor& d_fake, const torch::Tensor& y,
                      const torch::Tensor& y_hat, double lambda_l1);

struct GanTrainConfig {
  int epochs = 100;
  double lambda_l1 = 100.0;
  int batch_size = 16;
  double g_lr = 2e-3;
  double g_beta1 = 0.5;
  double g_beta2 = 0.999;
  double d_lr = 0.01;
  std::uint64_t seed = 0;
  /// Stop after this many optimizer steps (0 = run all epochs).
  long max_steps = 0;
  /// Held-out evaluation after every epoch.
  bool eval_each_epoch = true;
  /// Written after every epoch when set.
  std::optional<std::filesystem::path> checkpoint_path;

  void validate() const;
  nlohmann::json to_json() const;
};

struct ChannelScores {
  double mae = 0.0;
  double rmse = 0.0;
  double ssim = 0.0;
  double ssim_range = 0.0;
};

struct EvalReport {
  ChannelScores rss;
  ChannelScores exposure;
  std::size_t samples = 0;
};
nlohmann::json to_json(const EvalReport& r);

struct EpochLog {
  int epoch = 0;
  long steps = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double l1 = 0.0;
  double seconds = 0.0;
  std::optional<EvalReport> eval;
};
nlohmann::json to_json(const EpochLog& e);

struct GanRun {
  UNetGenerator generator{nullptr};
  PatchDiscriminator discriminator{nullptr};
  std::vector<EpochLog> history;
  /// Generator loss after every optimizer step.
  std::vector<double> step_g_loss;
};

/// [N,2,L,L] stacks of sample inputs / targets.
torch::Tensor stack_inputs(std::span<const Sample> samples);
torch::Tensor stack_targets(std::span<const Sample> samples);

/// dB-domain MAE/RMSE (pooled over outdoor pixels) and mean SSIM per channel,
/// with the model in inference mode.
EvalReport evaluate_model(MapModelImpl& model, std::span<const Sample> test, const EncodingSpec& enc = {},
                          int batch_size = 16);

/// Alternating D-step / G-step training. Models are built from the specs
/// after seeding, so a fixed seed reproduces the run exactly.
GanRun train_gan(const GeneratorSpec& gspec, const DiscriminatorSpec& dspec, std::span<const Sample> train,
                 std::span<const Sample> test, const GanTrainConfig& cfg, const EncodingSpec& enc = {});

struct RegressorTrainConfig {
  int epochs = 100;
  int batch_size = 16;
  double lr = 2e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  bool eval_each_epoch = true;
  std::optional<std::filesystem::path> checkpoint_path;

  nlohmann::json to_json() const;
};

struct RegressorRun {
  MapModel model;
  std::vector<EpochLog> history;
};

/// Pure L1 training of a baseline map model; `factory` runs after seeding.
RegressorRun train_regressor(const std::function<MapModel()>& factory, std::span<const Sample> train,
                             std::span<const Sample> test, const RegressorTrainConfig& cfg,
                             const EncodingSpec& enc = {});

void save_map_model(const std::filesystem::path& path, MapModelImpl& model, const EncodingSpec& enc,
                    int grid_size, const nlohmann::json& train_config, const nlohmann::json& meta,
                    torch::nn::Module* discriminator = nullptr);

struct LoadedMapModel {
  MapModel model;
  EncodingSpec encoding;
  int grid_size = 0;
  nlohmann::json header;
};
LoadedMapModel load_map_model(const std::filesystem::path& path);

/// Inference-mode forward and denormalization; building pixels are kept but
/// flagged invalid.
std::vector<RadioMaps> predict_maps(MapModelImpl& model, std::span<const Sample> inputs,
                                    const EncodingSpec& enc = {});
RadioMaps predict_maps(MapModelImpl& model, const SceneSpec& scene, const EncodingSpec& enc = {});

/// Predictor backed by a trained map model.
class SurrogatePredictor final : public Predictor {
 public:
  SurrogatePredictor(MapModel model, EncodingSpec enc, int grid_size);
  static std::shared_ptr<SurrogatePredictor> from_checkpoint(const std::filesystem::path& path);

  std::string name() const override { return "surrogate"; }
  int grid_size() const noexcept { return grid_size_; }
  RadioMaps predict(const SceneSpec& scene, std::span<const Pixel> sites) const override;
  std::vector<RadioMaps> predict_batch(const SceneSpec& scene,
                                       std::span<const std::vector<Pixel>> configs) const override;

 private:
  MapModel model_;
  EncodingSpec enc_;
  int grid_size_;
  mutable std::mutex mu_;
};

}  // namespace emfplan
