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

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace emfplan {

/// Anything that maps a [B,2,L,L] condition (outdoor mask, TX map) to
/// [B,2,L,L] normalized (RSS, exposure) maps in [-1, 1].
class MapModelImpl : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(torch::Tensor x) = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json spec_json() const = 0;
};
using MapModel = std::shared_ptr<MapModelImpl>;

struct GeneratorSpec {
  int depth = 7;
  int base_filters = 256;
  int kernel = 4;
  int stride = 2;
  double dropout_rate = 0.5;
  int max_multiplier = 8;
  int in_channels = 2;
  int out_channels = 2;

  void validate() const;
  /// Filters of encoder block i.
  int filters(int i) const;
};

/// Encoder-decoder with concatenating skips. Encoder block: conv(k4,s2) -> ReLU -> BN.
/// Decoder block: transposed conv -> ReLU -> BN, dropout on the first three.
class UNetGeneratorImpl : public MapModelImpl {
 public:
  explicit UNetGeneratorImpl(GeneratorSpec spec);

  torch::Tensor forward(torch::Tensor x) override;
  /// Same as forward but the skip from encoder block `zero_skip` is replaced by zeros.
  torch::Tensor forward_ablated(torch::Tensor x, std::optional<int> zero_skip);

  std::string kind() const override { return "npe_gan_generator"; }
  nlohmann::json spec_json() const override;
  const GeneratorSpec& spec() const { return spec_; }

 private:
  GeneratorSpec spec_;
  std::vector<torch::nn::Sequential> down_;
  std::vector<torch::nn::Sequential> up_;
};
TORCH_MODULE(UNetGenerator);

struct DiscriminatorSpec {
  int base_filters = 64;
  int n_strided = 3;
  int kernel = 4;
  double leaky_slope = 0.2;
  int in_channels = 4;

  void validate() const;
  /// Side length of the input window seen by one output entry.
  int receptive_field() const;
};

/// PatchGAN: strided conv blocks, one stride-1 block, a 1-channel stride-1 conv, sigmoid.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(DiscriminatorSpec spec);
  torch::Tensor forward(torch::Tensor condition, torch::Tensor candidate);
  const DiscriminatorSpec& spec() const { return spec_; }
  nlohmann::json spec_json() const;

 private:
  DiscriminatorSpec spec_;
  torch::nn::Sequential net_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

struct RegressorSpec {
  int depth = 8;
  int base_filters = 64;
  int max_multiplier = 8;

  void validate() const;
};

/// Plain UNet regressor: conv3x3 -> ReLU -> maxpool per encoder level,
/// transposed conv -> ReLU per decoder level, concatenating skips, tanh head.
class UNetRegressorImpl : public MapModelImpl {
 public:
  explicit UNetRegressorImpl(RegressorSpec spec);
  torch::Tensor forward(torch::Tensor x) override;
  std::string kind() const override { return "unet_regressor"; }
  nlohmann::json spec_json() const override;

 private:
  RegressorSpec spec_;
  std::vector<torch::nn::Conv2d> enc_;
  std::vector<torch::nn::ConvTranspose2d> dec_;
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(UNetRegressor);

struct AutoencoderSpec {
  int base_filters = 64;
  int levels = 4;

  void validate() const;
};

/// Four strided encoder convs, a bottleneck conv, four transposed-conv decoders. No skips.
class ConvAutoencoderImpl : public MapModelImpl {
 public:
  explicit ConvAutoencoderImpl(AutoencoderSpec spec);
  torch::Tensor forward(torch::Tensor x) override;
  std::string kind() const override { return "conv_autoencoder"; }
  nlohmann::json spec_json() const override;
  bool has_skip_connections() const { return false; }

 private:
  AutoencoderSpec spec_;
  torch::nn::Sequential net_{nullptr};
};
TORCH_MODULE(ConvAutoencoder);

/// He-normal weights, zero biases, BN gamma 1 / beta 0.
void he_normal_init(torch::nn::Module& module);

/// Rebuilds a model from its kind and spec JSON (checkpoint header).
MapModel make_map_model(const std::string& kind, const nlohmann::json& spec);

}  // namespace emfplan
