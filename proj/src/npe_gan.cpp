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

#include "emfplan/npe_gan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "emfplan/checkpoint.hpp"
#include "emfplan/error.hpp"
#include "emfplan/metrics.hpp"

namespace emfplan {
namespace {

using Clock = std::chrono::steady_clock;

FloatGrid to_grid(const torch::Tensor& plane) {
  auto c = plane.contiguous().to(torch::kFloat32);
  FloatGrid g(static_cast<int>(c.size(0)), static_cast<int>(c.size(1)));
  std::memcpy(g.raw().data(), c.data_ptr<float>(), g.size() * sizeof(float));
  return g;
}

torch::Tensor stack_planes(std::span<const Sample> samples, bool target) {
  if (samples.empty()) throw InvalidArgument("no samples to stack");
  const int n = samples.front().size();
  auto out = torch::empty({static_cast<long>(samples.size()), 2, n, n}, torch::kFloat32);
  auto* dst = out.data_ptr<float>();
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& planes = target ? samples[i].target : samples[i].input;
    for (int k = 0; k < 2; ++k) {
      if (planes[k].rows() != n || planes[k].cols() != n) throw ShapeMismatch("samples differ in size");
      std::memcpy(dst + (2 * i + k) * plane, planes[k].raw().data(), plane * sizeof(float));
    }
  }
  return out;
}

void check_finite(const torch::Tensor& loss, const char* what, long step) {
  const double v = loss.item<double>();
  if (!std::isfinite(v))
    throw TrainingDiverged(std::string(what) + " became non-finite at step " + std::to_string(step));
}

std::vector<std::vector<long>> epoch_batches(std::size_t n, int batch_size, std::mt19937_64& rng) {
  std::vector<long> perm(n);
  std::iota(perm.begin(), perm.end(), 0L);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<long>> out;
  for (std::size_t s = 0; s < n; s += batch_size) {
    const std::size_t e = std::min(n, s + batch_size);
    // A lone sample cannot be batch-normalized.
    if (e - s < 2) break;
    out.emplace_back(perm.begin() + s, perm.begin() + e);
  }
  if (out.empty()) throw InvalidArgument("training set needs at least two samples");
  return out;
}

nlohmann::json history_json(const std::vector<EpochLog>& h) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& e : h) a.push_back(to_json(e));
  return a;
}

nlohmann::json encoding_json(const EncodingSpec& e) {
  return {{"rss_floor_dbm", e.rss_floor_dbm},
          {"rss_ceil_dbm", e.rss_ceil_dbm},
          {"exp_floor_dbuv", e.exp_floor_dbuv},
          {"exp_ceil_dbuv", e.exp_ceil_dbuv}};
}

EncodingSpec encoding_from(const nlohmann::json& j) {
  EncodingSpec e;
  e.rss_floor_dbm = j.at("rss_floor_dbm");
  e.rss_ceil_dbm = j.at("rss_ceil_dbm");
  e.exp_floor_dbuv = j.at("exp_floor_dbuv");
  e.exp_ceil_dbuv = j.at("exp_ceil_dbuv");
  e.validate();
  return e;
}

}  // namespace

torch::Tensor discriminator_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake) {
  if (!d_real.sizes().equals(d_fake.sizes())) throw ShapeMismatch("patch maps differ in shape");
  return torch::binary_cross_entropy(d_real, torch::ones_like(d_real)) +
         torch::binary_cross_entropy(d_fake, torch::zeros_like(d_fake));
}

torch::Tensor generator_loss(const torch::Tensor& d_fake, const torch::Tensor& y, const torch::Tensor& y_hat,
                             double lambda_l1) {
  if (!y.sizes().equals(y_hat.sizes())) throw ShapeMismatch("y and y_hat differ in shape");
  if (lambda_l1 < 0.0) throw InvalidArgument("lambda_l1 must be >= 0");
  return torch::binary_cross_entropy(d_fake, torch::ones_like(d_fake)) +
         lambda_l1 * torch::mean(torch::abs(y - y_hat));
}

GanLosses cgan_losses(const torch::Tensor& d_real, const torch::Tensor& d_fake, const torch::Tensor& y,
                      const torch::Tensor& y_hat, double lambda_l1) {
  return {discriminator_loss(d_real, d_fake), generator_loss(d_fake, y, y_hat, lambda_l1)};
}

void GanTrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (lambda_l1 < 0.0) throw InvalidArgument("lambda_l1 must be >= 0");
  if (batch_size < 2) throw InvalidArgument("batch_size must be >= 2");
  if (!(g_lr > 0.0) || !(d_lr > 0.0)) throw InvalidArgument("learning rates must be positive");
}

nlohmann::json GanTrainConfig::to_json() const {
  return {{"epochs", epochs},       {"lambda_l1", lambda_l1},     {"batch_size", batch_size},
          {"g_optimizer", "adam"},  {"g_lr", g_lr},               {"g_beta1", g_beta1},
          {"g_beta2", g_beta2},     {"d_optimizer", "sgd"},       {"d_lr", d_lr},
          {"init", "he_normal"},    {"seed", seed},               {"max_steps", max_steps}};
}

nlohmann::json RegressorTrainConfig::to_json() const {
  return {{"epochs", epochs}, {"batch_size", batch_size}, {"optimizer", "adam"}, {"lr", lr},
          {"beta1", beta1},   {"beta2", beta2},           {"loss", "l1"},        {"seed", seed}};
}

nlohmann::json to_json(const EvalReport& r) {
  auto ch = [](const ChannelScores& c) {
    return nlohmann::json{{"mae", c.mae}, {"rmse", c.rmse}, {"ssim", c.ssim}, {"ssim_range_db", c.ssim_range}};
  };
  return {{"rss", ch(r.rss)}, {"exposure", ch(r.exposure)}, {"samples", r.samples}};
}

nlohmann::json to_json(const EpochLog& e) {
  nlohmann::json j = {{"epoch", e.epoch}, {"steps", e.steps}, {"d_loss", e.d_loss},
                      {"g_loss", e.g_loss}, {"l1", e.l1},     {"seconds", e.seconds}};
  if (e.eval) j["eval"] = to_json(*e.eval);
  return j;
}

torch::Tensor stack_inputs(std::span<const Sample> samples) { return stack_planes(samples, false); }
torch::Tensor stack_targets(std::span<const Sample> samples) { return stack_planes(samples, true); }

std::vector<RadioMaps> predict_maps(MapModelImpl& model, std::span<const Sample> inputs, const EncodingSpec& enc) {
  std::vector<RadioMaps> out;
  if (inputs.empty()) return out;
  torch::NoGradGuard guard;
  const bool was_training = model.is_training();
  model.eval();
  const auto y = model.forward(stack_inputs(inputs));
  if (was_training) model.train();
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    RadioMaps m;
    m.rss_dbm = denormalize(to_grid(y[i][0]), MapChannel::kRss, enc);
    m.exposure_dbuv = denormalize(to_grid(y[i][1]), MapChannel::kExposure, enc);
    m.valid_mask = inputs[i].valid_mask();
    out.push_back(std::move(m));
  }
  return out;
}

RadioMaps predict_maps(MapModelImpl& model, const SceneSpec& scene, const EncodingSpec& enc) {
  const Sample s = make_input(scene);
  return predict_maps(model, std::span<const Sample>(&s, 1), enc).front();
}

EvalReport evaluate_model(MapModelImpl& model, std::span<const Sample> test, const EncodingSpec& enc,
                          int batch_size) {
  if (test.empty()) throw InvalidArgument("evaluation set is empty");
  ErrorAccumulator acc[2];
  double ssim_sum[2] = {0.0, 0.0};
  const MapChannel chans[2] = {MapChannel::kRss, MapChannel::kExposure};
  for (std::size_t s = 0; s < test.size(); s += batch_size) {
    const auto part = test.subspan(s, std::min<std::size_t>(batch_size, test.size() - s));
    const auto pred = predict_maps(model, part, enc);
    for (std::size_t i = 0; i < part.size(); ++i) {
      const auto mask = part[i].valid_mask();
      for (int k = 0; k < 2; ++k) {
        const auto ref = denormalize(part[i].target[k], chans[k], enc);
        const auto& p = k == 0 ? pred[i].rss_dbm : pred[i].exposure_dbuv;
        acc[k].add(ref, p, mask);
        ssim_sum[k] += ssim(ref, p, enc.range(chans[k]));
      }
    }
  }
  EvalReport r;
  r.samples = test.size();
  ChannelScores* out[2] = {&r.rss, &r.exposure};
  for (int k = 0; k < 2; ++k) {
    const auto st = acc[k].stats();
    out[k]->mae = st.mae;
    out[k]->rmse = st.rmse;
    out[k]->ssim = ssim_sum[k] / static_cast<double>(test.size());
    out[k]->ssim_range = enc.range(chans[k]);
  }
  return r;
}

GanRun train_gan(const GeneratorSpec& gspec, const DiscriminatorSpec& dspec, std::span<const Sample> train,
                 std::span<const Sample> test, const GanTrainConfig& cfg, const EncodingSpec& enc) {
  cfg.validate();
  if (train.empty()) throw InvalidArgument("training set is empty");
  torch::manual_seed(cfg.seed);
  GanRun run;
  run.generator = UNetGenerator(gspec);
  run.discriminator = PatchDiscriminator(dspec);
  auto& G = run.generator;
  auto& D = run.discriminator;
  torch::optim::Adam opt_g(G->parameters(),
                           torch::optim::AdamOptions(cfg.g_lr).betas({cfg.g_beta1, cfg.g_beta2}));
  torch::optim::SGD opt_d(D->parameters(), torch::optim::SGDOptions(cfg.d_lr));

  const auto X = stack_inputs(train);
  const auto Y = stack_targets(train);
  std::mt19937_64 rng(cfg.seed);
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    G->train();
    D->train();
    EpochLog log;
    log.epoch = epoch;
    const auto batches = epoch_batches(train.size(), cfg.batch_size, rng);
    for (const auto& b : batches) {
      const auto idx = torch::tensor(b, torch::kLong);
      const auto x = X.index_select(0, idx);
      const auto y = Y.index_select(0, idx);
      auto fake = G->forward(x);

      const auto d_loss = discriminator_loss(D->forward(x, y), D->forward(x, fake.detach()));
      check_finite(d_loss, "discriminator loss", step);
      opt_d.zero_grad();
      d_loss.backward();
      opt_d.step();

      const auto l1 = torch::mean(torch::abs(y - fake));
      const auto g_loss = generator_loss(D->forward(x, fake), y, fake, cfg.lambda_l1);
      check_finite(g_loss, "generator loss", step);
      opt_g.zero_grad();
      g_loss.backward();
      opt_g.step();

      ++step;
      log.d_loss += d_loss.item<double>();
      log.g_loss += g_loss.item<double>();
      log.l1 += l1.item<double>();
      run.step_g_loss.push_back(g_loss.item<double>());
      if (cfg.max_steps > 0 && step >= cfg.max_steps) break;
    }
    const double n = static_cast<double>(std::max<long>(1, step - (run.history.empty() ? 0 : run.history.back().steps)));
    log.steps = step;
    log.d_loss /= n;
    log.g_loss /= n;
    log.l1 /= n;
    if (cfg.eval_each_epoch && !test.empty()) log.eval = evaluate_model(*G, test, enc);
    log.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    run.history.push_back(log);
    if (cfg.checkpoint_path) {
      nlohmann::json meta = {{"seed", cfg.seed}, {"epoch", epoch}, {"history", history_json(run.history)},
                             {"discriminator", D->spec_json()}};
      save_map_model(*cfg.checkpoint_path, *G, enc, train.front().size(), cfg.to_json(), meta, D.ptr().get());
    }
    if (cfg.max_steps > 0 && step >= cfg.max_steps) break;
  }
  G->eval();
  D->eval();
  return run;
}

RegressorRun train_regressor(const std::function<MapModel()>& factory, std::span<const Sample> train,
                             std::span<const Sample> test, const RegressorTrainConfig& cfg,
                             const EncodingSpec& enc) {
  if (cfg.epochs < 1 || cfg.batch_size < 2) throw InvalidArgument("invalid regressor training config");
  if (train.empty()) throw InvalidArgument("training set is empty");
  torch::manual_seed(cfg.seed);
  RegressorRun run;
  run.model = factory();
  auto& M = *run.model;
  torch::optim::Adam opt(M.parameters(), torch::optim::AdamOptions(cfg.lr).betas({cfg.beta1, cfg.beta2}));
  const auto X = stack_inputs(train);
  const auto Y = stack_targets(train);
  std::mt19937_64 rng(cfg.seed);
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    M.train();
    EpochLog log;
    log.epoch = epoch;
    const auto batches = epoch_batches(train.size(), cfg.batch_size, rng);
    for (const auto& b : batches) {
      const auto idx = torch::tensor(b, torch::kLong);
      const auto loss = torch::mean(torch::abs(Y.index_select(0, idx) - M.forward(X.index_select(0, idx))));
      check_finite(loss, "L1 loss", step);
      opt.zero_grad();
      loss.backward();
      opt.step();
      ++step;
      log.l1 += loss.item<double>();
    }
    log.steps = step;
    log.l1 /= static_cast<double>(batches.size());
    log.g_loss = log.l1;
    if (cfg.eval_each_epoch && !test.empty()) log.eval = evaluate_model(M, test, enc);
    log.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    run.history.push_back(log);
    if (cfg.checkpoint_path)
      save_map_model(*cfg.checkpoint_path, M, enc, train.front().size(), cfg.to_json(),
                     {{"seed", cfg.seed}, {"epoch", epoch}, {"history", history_json(run.history)}});
  }
  M.eval();
  return run;
}

void save_map_model(const std::filesystem::path& path, MapModelImpl& model, const EncodingSpec& enc,
                    int grid_size, const nlohmann::json& train_config, const nlohmann::json& meta,
                    torch::nn::Module* discriminator) {
  Checkpoint ck;
  ck.kind = model.kind();
  ck.config = {{"model", model.spec_json()},
               {"encoding", encoding_json(enc)},
               {"grid_size", grid_size},
               {"train", train_config}};
  ck.meta = meta;
  for (auto& [k, v] : module_state(model)) ck.tensors["G." + k] = v;
  if (discriminator)
    for (auto& [k, v] : module_state(*discriminator)) ck.tensors["D." + k] = v;
  save_checkpoint(path, ck);
}

LoadedMapModel load_map_model(const std::filesystem::path& path) {
  const auto ck = load_checkpoint(path);
  LoadedMapModel out;
  out.model = make_map_model(ck.kind, ck.config.at("model"));
  std::map<std::string, torch::Tensor> g;
  for (const auto& [k, v] : ck.tensors)
    if (k.rfind("G.", 0) == 0) g[k.substr(2)] = v;
  load_module_state(*out.model, g);
  out.model->eval();
  out.encoding = encoding_from(ck.config.at("encoding"));
  out.grid_size = ck.config.at("grid_size");
  out.header = {{"kind", ck.kind}, {"config", ck.config}, {"meta", ck.meta}};
  return out;
}

SurrogatePredictor::SurrogatePredictor(MapModel model, EncodingSpec enc, int grid_size)
    : model_(std::move(model)), enc_(enc), grid_size_(grid_size) {
  if (!model_) throw InvalidArgument("surrogate needs a model");
  enc_.validate();
  model_->eval();
}

std::shared_ptr<SurrogatePredictor> SurrogatePredictor::from_checkpoint(const std::filesystem::path& path) {
  auto m = load_map_model(path);
  return std::make_shared<SurrogatePredictor>(m.model, m.encoding, m.grid_size);
}

RadioMaps SurrogatePredictor::predict(const SceneSpec& scene, std::span<const Pixel> sites) const {
  const std::vector<std::vector<Pixel>> one{std::vector<Pixel>(sites.begin(), sites.end())};
  return predict_batch(scene, one).front();
}

std::vector<RadioMaps> SurrogatePredictor::predict_batch(const SceneSpec& scene,
                                                         std::span<const std::vector<Pixel>> configs) const {
  if (scene.grid_size() != grid_size_)
    throw ShapeMismatch("model trained for " + std::to_string(grid_size_) + " px grids, scene has " +
                        std::to_string(scene.grid_size()));
  const SceneSpec geometry = scene.with_transmitters({});
  const Sample base = make_input(geometry);
  std::vector<Sample> inputs;
  inputs.reserve(configs.size());
  for (const auto& c : configs) {
    Sample s = base;
    for (Pixel p : c) {
      if (!scene.contains(p)) throw BoundsError("site outside the scene");
      if (scene.is_building(p)) throw InvalidArgument("site on a building pixel");
      s.input[1][p] = 1.0f;
    }
    inputs.push_back(std::move(s));
  }
  std::lock_guard lock(mu_);
  return predict_maps(*model_, inputs, enc_);
}

}  // namespace emfplan
