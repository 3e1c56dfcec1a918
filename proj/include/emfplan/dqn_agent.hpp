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
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "emfplan/baselines.hpp"
#include "emfplan/placement_env.hpp"

namespace emfplan {

struct QNetworkSpec {
  int grid_size = 32;
  int n_actions = 1;
};

/// conv16 -> conv32 -> conv64 -> maxpool 2 -> conv128 (3x3 same, ReLU) -> flatten -> linear |A|.
class QNetworkImpl : public torch::nn::Module {
 public:
  explicit QNetworkImpl(QNetworkSpec spec);
  torch::Tensor forward(torch::Tensor x);
  const QNetworkSpec& spec() const { return spec_; }

 private:
  QNetworkSpec spec_;
  torch::nn::Conv2d c1_{nullptr}, c2_{nullptr}, c3_{nullptr}, c4_{nullptr};
  torch::nn::Linear fc_{nullptr};
};
TORCH_MODULE(QNetwork);

struct DqnConfig {
  double learning_rate = 1e-4;
  double gamma = 0.95;
  int batch_size = 32;
  int episodes = 1000;
  std::size_t replay_capacity = 10000;
  long target_sync_period = 200;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  /// Linear decay over the first decay_fraction of episodes, flat afterwards.
  double epsilon(int episode) const;
};

/// Channels: coverage, building; flattened [2, L, L] as 0/1 bytes.
std::vector<std::uint8_t> state_snapshot(const DeploymentState& s);
torch::Tensor snapshots_to_tensor(std::span<const std::vector<std::uint8_t>* const> snaps, int grid_size);

struct Transition {
  std::vector<std::uint8_t> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<std::uint8_t> next_state;
  std::vector<std::uint8_t> next_mask;
  bool terminal = false;
};

/// FIFO ring buffer.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  /// Oldest first.
  const Transition& at(std::size_t i) const;
  /// Uniform without replacement; nullopt until size() >= batch_size.
  std::optional<std::vector<const Transition*>> sample(std::size_t batch_size, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // index of the oldest item once full
};

/// Epsilon-greedy over legal actions; greedy ties go to the lowest index.
std::size_t select_action(std::span<const float> q, std::span<const std::uint8_t> mask, double epsilon,
                          std::mt19937_64& rng);

/// r if terminal (or nothing legal next), else r + gamma * max legal next_q.
double bellman_target(double reward, std::span<const float> next_q, std::span<const std::uint8_t> next_mask,
                      bool terminal, double gamma);

/// mean((Q(s, a) - y)^2) over the batch, using only the taken actions.
torch::Tensor dqn_loss(const torch::Tensor& q_all, const torch::Tensor& actions, const torch::Tensor& targets);

/// One Adam step on a minibatch; returns the loss.
double train_step(QNetwork& q, QNetwork& target, torch::optim::Optimizer& opt,
                  std::span<const Transition* const> batch, double gamma);

/// Hard copy of parameters and buffers when step % period == 0.
bool sync_target(QNetwork& q, QNetwork& target, long step, long period);

struct EpisodeLog {
  int episode = 0;
  double ret = 0.0;
  double epsilon = 0.0;
  double loss = 0.0;  // mean over this episode's training steps (NaN if none)
  int length = 0;
};

struct DqnRun {
  QNetwork q{nullptr};
  std::vector<EpisodeLog> curve;
  long steps = 0;
  long train_steps = 0;
  double seconds = 0.0;
};

DqnRun train_dqn(const PlacementEnv& env, std::span<const Pixel> pre_deployed, const DqnConfig& cfg);

/// CSV with header episode,return,epsilon,loss.
std::string curve_to_csv(std::span<const EpisodeLog> curve);

/// Greedy rollout of `n_bs` placements from `pre_deployed`.
PlacementResult place(const PlacementEnv& env, std::span<const Pixel> pre_deployed, int n_bs, QNetwork& q);

void save_dqn(const std::filesystem::path& path, QNetwork& q, const DqnConfig& cfg, const PlacementEnv& env,
              const nlohmann::json& meta = nlohmann::json::object());

struct LoadedDqn {
  QNetwork q{nullptr};
  int candidate_stride = 1;
  nlohmann::json header;
};
LoadedDqn load_dqn(const std::filesystem::path& path);

}  // namespace emfplan
