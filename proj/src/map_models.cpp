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

#include "emfplan/map_models.hpp"

#include <algorithm>
#include <cmath>

#include "emfplan/error.hpp"

namespace emfplan {
namespace nn = torch::nn;

void GeneratorSpec::validate() const {
  if (depth < 1) throw InvalidArgument("generator depth must be >= 1");
  if (base_filters < 1) throw InvalidArgument("generator base_filters must be >= 1");
  if (kernel != 4 || stride != 2) throw InvalidArgument("generator blocks use kernel 4, stride 2");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw InvalidArgument("dropout_rate must be in [0, 1)");
  if (max_multiplier < 1) throw InvalidArgument("max_multiplier must be >= 1");
}

int GeneratorSpec::filters(int i) const {
  return base_filters * std::min(1 << std::min(i, 20), max_multiplier);
}

UNetGeneratorImpl::UNetGeneratorImpl(GeneratorSpec spec) : spec_(spec) {
  spec_.validate();
  const int d = spec_.depth;
  for (int i = 0; i < d; ++i) {
    const int in = i == 0 ? spec_.in_channels : spec_.filters(i - 1);
    nn::Sequential block(
        nn::Conv2d(nn::Conv2dOptions(in, spec_.filters(i), 4).stride(2).padding(1)),
        nn::ReLU(),
        nn::BatchNorm2d(spec_.filters(i)));
    down_.push_back(register_module("down" + std::to_string(i), block));
  }
  // up_[k] handles encoder level i = d-1-k, so up_[0..2] are the first decoder blocks.
  for (int k = 0; k < d; ++k) {
    const int i = d - 1 - k;
    const int in = i == d - 1 ? spec_.filters(i) : 2 * spec_.filters(i);
    const bool last = i == 0;
    const int out = last ? spec_.out_channels : spec_.filters(i - 1);
    nn::Sequential block(
        nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1)));
    if (last) {
      block->push_back(nn::Tanh());
    } else {
      block->push_back(nn::ReLU());
      block->push_back(nn::BatchNorm2d(out));
      if (k < 3 && spec_.dropout_rate > 0.0) block->push_back(nn::Dropout(spec_.dropout_rate));
    }
    up_.push_back(register_module("up" + std::to_string(k), block));
  }
  he_normal_init(*this);
}

torch::Tensor UNetGeneratorImpl::forward(torch::Tensor x) { return forward_ablated(x, std::nullopt); }

torch::Tensor UNetGeneratorImpl::forward_ablated(torch::Tensor x, std::optional<int> zero_skip) {
  const int d = spec_.depth;
  if (x.dim() != 4 || x.size(1) != spec_.in_channels)
    throw ShapeMismatch("generator expects [B," + std::to_string(spec_.in_channels) + ",L,L]");
  const std::int64_t unit = std::int64_t{1} << d;
  if (x.size(2) % unit != 0 || x.size(3) % unit != 0)
    throw ShapeMismatch("input side must be divisible by 2^depth = " + std::to_string(unit));
  if (zero_skip && (*zero_skip < 0 || *zero_skip >= d - 1))
    throw InvalidArgument("skip index out of range");

  std::vector<torch::Tensor> enc;
  enc.reserve(d);
  auto h = x;
  for (auto& block : down_) {
    h = block->forward(h);
    enc.push_back(h);
  }
  h = up_[0]->forward(enc[d - 1]);
  for (int k = 1; k < d; ++k) {
    const int i = d - 1 - k;
    auto skip = (zero_skip && *zero_skip == i) ? torch::zeros_like(enc[i]) : enc[i];
    h = up_[k]->forward(torch::cat({h, skip}, 1));
  }
  return h;
}

nlohmann::json UNetGeneratorImpl::spec_json() const {
  return {{"depth", spec_.depth},
          {"base_filters", spec_.base_filters},
          {"kernel", spec_.kernel},
          {"stride", spec_.stride},
          {"dropout_rate", spec_.dropout_rate},
          {"max_multiplier", spec_.max_multiplier}};
}

void DiscriminatorSpec::validate() const {
  if (base_filters < 1 || n_strided < 1) throw InvalidArgument("invalid discriminator spec");
  if (kernel != 4) throw InvalidArgument("discriminator uses kernel 4");
}

int DiscriminatorSpec::receptive_field() const {
  // Walk back from one output entry: two stride-1 convs, then n_strided stride-2 convs.
  int rf = 1;
  rf = rf + (kernel - 1);
  rf = rf + (kernel - 1);
  for (int i = 0; i < n_strided; ++i) rf = (rf - 1) * 2 + kernel;
  return rf;
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(DiscriminatorSpec spec) : spec_(spec) {
  spec_.validate();
  const auto leaky = nn::LeakyReLUOptions().negative_slope(spec_.leaky_slope);
  nn::Sequential seq;
  int ch = spec_.base_filters;
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(spec_.in_channels, ch, 4).stride(2).padding(1)));
  seq->push_back(nn::LeakyReLU(leaky));
  for (int i = 1; i < spec_.n_strided; ++i) {
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(ch, ch * 2, 4).stride(2).padding(1)));
    seq->push_back(nn::BatchNorm2d(ch * 2));
    seq->push_back(nn::LeakyReLU(leaky));
    ch *= 2;
  }
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(ch, ch * 2, 4).stride(1).padding(1)));
  seq->push_back(nn::BatchNorm2d(ch * 2));
  seq->push_back(nn::LeakyReLU(leaky));
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(ch * 2, 1, 4).stride(1).padding(1)));
  seq->push_back(nn::Sigmoid());
  net_ = register_module("net", seq);
  he_normal_init(*this);
}

torch::Tensor PatchDiscriminatorImpl::forward(torch::Tensor condition, torch::Tensor candidate) {
  if (!condition.sizes().equals(candidate.sizes()))
    throw ShapeMismatch("discriminator condition and candidate shapes differ");
  return net_->forward(torch::cat({condition, candidate}, 1));
}

nlohmann::json PatchDiscriminatorImpl::spec_json() const {
  return {{"base_filters", spec_.base_filters},
          {"n_strided", spec_.n_strided},
          {"kernel", spec_.kernel},
          {"leaky_slope", spec_.leaky_slope},
          {"receptive_field", spec_.receptive_field()}};
}

void RegressorSpec::validate() const {
  if (depth < 1 || base_filters < 1 || max_multiplier < 1) throw InvalidArgument("invalid regressor spec");
}

UNetRegressorImpl::UNetRegressorImpl(RegressorSpec spec) : spec_(spec) {
  spec_.validate();
  auto f = [&](int i) { return spec_.base_filters * std::min(1 << std::min(i, 20), spec_.max_multiplier); };
  const int d = spec_.depth;
  for (int i = 0; i < d; ++i) {
    const int in = i == 0 ? 2 : f(i - 1);
    enc_.push_back(register_module("enc" + std::to_string(i),
                                   nn::Conv2d(nn::Conv2dOptions(in, f(i), 3).padding(1))));
  }
  for (int k = 0; k < d; ++k) {
    const int i = d - 1 - k;
    const int in = i == d - 1 ? f(i) : 2 * f(i);
    const int out = i == 0 ? f(0) : f(i - 1);
    dec_.push_back(register_module("dec" + std::to_string(k),
                                   nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1))));
  }
  head_ = register_module("head", nn::Conv2d(nn::Conv2dOptions(f(0), 2, 1)));
  he_normal_init(*this);
}

torch::Tensor UNetRegressorImpl::forward(torch::Tensor x) {
  const int d = spec_.depth;
  const std::int64_t unit = std::int64_t{1} << d;
  if (x.dim() != 4 || x.size(1) != 2 || x.size(2) % unit != 0 || x.size(3) % unit != 0)
    throw ShapeMismatch("unet regressor expects [B,2,L,L] with L divisible by 2^depth");
  std::vector<torch::Tensor> skips;
  auto h = x;
  for (auto& conv : enc_) {
    h = torch::max_pool2d(torch::relu(conv->forward(h)), 2);
    skips.push_back(h);
  }
  h = torch::relu(dec_[0]->forward(skips[d - 1]));
  for (int k = 1; k < d; ++k) h = torch::relu(dec_[k]->forward(torch::cat({h, skips[d - 1 - k]}, 1)));
  return torch::tanh(head_->forward(h));
}

nlohmann::json UNetRegressorImpl::spec_json() const {
  return {{"depth", spec_.depth}, {"base_filters", spec_.base_filters}, {"max_multiplier", spec_.max_multiplier}};
}

void AutoencoderSpec::validate() const {
  if (base_filters < 1 || levels < 1) throw InvalidArgument("invalid autoencoder spec");
}

ConvAutoencoderImpl::ConvAutoencoderImpl(AutoencoderSpec spec) : spec_(spec) {
  spec_.validate();
  nn::Sequential seq;
  int ch = 2;
  for (int i = 0; i < spec_.levels; ++i) {
    const int out = spec_.base_filters << i;
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(ch, out, 4).stride(2).padding(1)));
    seq->push_back(nn::ReLU());
    ch = out;
  }
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(ch, ch, 3).padding(1)));
  seq->push_back(nn::ReLU());
  for (int i = spec_.levels - 1; i >= 0; --i) {
    const bool last = i == 0;
    const int out = last ? 2 : (spec_.base_filters << (i - 1));
    seq->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(ch, out, 4).stride(2).padding(1)));
    if (last) {
      seq->push_back(nn::Tanh());
    } else {
      seq->push_back(nn::ReLU());
    }
    ch = out;
  }
  net_ = register_module("net", seq);
  he_normal_init(*this);
}

torch::Tensor ConvAutoencoderImpl::forward(torch::Tensor x) {
  const std::int64_t unit = std::int64_t{1} << spec_.levels;
  if (x.dim() != 4 || x.size(1) != 2 || x.size(2) % unit != 0 || x.size(3) % unit != 0)
    throw ShapeMismatch("autoencoder expects [B,2,L,L] with L divisible by 2^levels");
  return net_->forward(x);
}

nlohmann::json ConvAutoencoderImpl::spec_json() const {
  return {{"base_filters", spec_.base_filters}, {"levels", spec_.levels}};
}

void he_normal_init(torch::nn::Module& module) {
  torch::NoGradGuard guard;
  for (auto& m : module.modules(/*include_self=*/false)) {
    if (auto* c = m->as<nn::Conv2d>()) {
      nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanIn, torch::kReLU);
      if (c->bias.defined()) nn::init::zeros_(c->bias);
    } else if (auto* t = m->as<nn::ConvTranspose2d>()) {
      // Fan-in is the number of inputs feeding one output pixel; libtorch
      // would derive it from the output channels for transposed weights.
      const auto& o = t->options;
      const double fan = static_cast<double>(o.in_channels()) * (*o.kernel_size())[0] * (*o.kernel_size())[1] /
                         ((*o.stride())[0] * (*o.stride())[1]);
      t->weight.normal_(0.0, std::sqrt(2.0 / fan));
      if (t->bias.defined()) nn::init::zeros_(t->bias);
    } else if (auto* b = m->as<nn::BatchNorm2d>()) {
      nn::init::ones_(b->weight);
      nn::init::zeros_(b->bias);
    } else if (auto* l = m->as<nn::Linear>()) {
      nn::init::kaiming_normal_(l->weight, 0.0, torch::kFanIn, torch::kReLU);
      if (l->bias.defined()) nn::init::zeros_(l->bias);
    }
  }
}

MapModel make_map_model(const std::string& kind, const nlohmann::json& spec) {
  if (kind == "npe_gan_generator") {
    GeneratorSpec g;
    g.depth = spec.at("depth");
    g.base_filters = spec.at("base_filters");
    g.dropout_rate = spec.value("dropout_rate", 0.5);
    g.max_multiplier = spec.value("max_multiplier", 8);
    return std::make_shared<UNetGeneratorImpl>(g);
  }
  if (kind == "unet_regressor") {
    RegressorSpec r;
    r.depth = spec.at("depth");
    r.base_filters = spec.at("base_filters");
    r.max_multiplier = spec.value("max_multiplier", 8);
    return std::make_shared<UNetRegressorImpl>(r);
  }
  if (kind == "conv_autoencoder") {
    AutoencoderSpec a;
    a.base_filters = spec.at("base_filters");
    a.levels = spec.value("levels", 4);
    return std::make_shared<ConvAutoencoderImpl>(a);
  }
  throw InvalidArgument("unknown model kind " + kind);
}

}  // namespace emfplan
