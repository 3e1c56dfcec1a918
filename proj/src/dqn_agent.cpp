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

#include "emfplan/dqn_agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "emfplan/checkpoint.hpp"
#include "emfplan/error.hpp"
#include "emfplan/map_models.hpp"

namespace emfplan {
namespace nn = torch::nn;

QNetworkImpl::QNetworkImpl(QNetworkSpec spec) : spec_(spec) {
  if (spec_.grid_size < 2 || spec_.grid_size % 2 != 0) throw InvalidArgument("Q-network grid must be even");
  if (spec_.n_actions < 1) throw InvalidArgument("Q-network needs at least one action");
  auto conv = [](int in, int out) { return nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1)); };
  c1_ = register_module("c1", conv(2, 16));
  c2_ = register_module("c2", conv(16, 32));
  c3_ = register_module("c3", conv(32, 64));
  c4_ = register_module("c4", conv(64, 128));
  const long half = spec_.grid_size / 2;
  fc_ = register_module("fc", nn::Linear(128 * half * half, spec_.n_actions));
  he_normal_init(*this);
  // Small linear head so initial Q-values sit near zero.
  torch::NoGradGuard guard;
  fc_->weight.mul_(0.01);
}

torch::Tensor QNetworkImpl::forward(torch::Tensor x) {
  if (x.dim() != 4 || x.size(1) != 2 || x.size(2) != spec_.grid_size || x.size(3) != spec_.grid_size)
    throw ShapeMismatch("Q-network expects [B,2," + std::to_string(spec_.grid_size) + "," +
                        std::to_string(spec_.grid_size) + "]");
  x = torch::relu(c1_->forward(x));
  x = torch::relu(c2_->forward(x));
  x = torch::max_pool2d(torch::relu(c3_->forward(x)), 2);
  x = torch::relu(c4_->forward(x));
  return fc_->forward(x.flatten(1));
}

void DqnConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must be in (0, 1]");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (static_cast<std::size_t>(batch_size) > replay_capacity)
    throw InvalidArgument("batch_size must not exceed replay_capacity");
  if (episodes < 1) throw InvalidArgument("episodes must be >= 1");
  if (target_sync_period < 1) throw InvalidArgument("target_sync_period must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > 1.0)
    throw InvalidArgument("epsilon bounds must be in [0, 1]");
  if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0))
    throw InvalidArgument("epsilon_decay_fraction must be in (0, 1]");
}

nlohmann::json DqnConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"gamma", gamma},
          {"batch_size", batch_size},
          {"episodes", episodes},
          {"replay_capacity", replay_capacity},
          {"target_sync_period", target_sync_period},
          {"epsilon_start", epsilon_start},
          {"epsilon_end", epsilon_end},
          {"epsilon_decay_fraction", epsilon_decay_fraction},
          {"optimizer", "adam"},
          {"loss", "mse"},
          {"seed", seed}};
}

double DqnConfig::epsilon(int episode) const {
  const double span = std::max(1.0, std::floor(epsilon_decay_fraction * episodes));
  const double t = std::min(1.0, static_cast<double>(episode) / span);
  return epsilon_start + (epsilon_end - epsilon_start) * t;
}

std::vector<std::uint8_t> state_snapshot(const DeploymentState& s) {
  std::vector<std::uint8_t> out(s.coverage_channel.raw());
  out.insert(out.end(), s.building_channel.raw().begin(), s.building_channel.raw().end());
  return out;
}

torch::Tensor snapshots_to_tensor(std::span<const std::vector<std::uint8_t>* const> snaps, int grid_size) {
  const std::size_t per = 2 * static_cast<std::size_t>(grid_size) * grid_size;
  auto bytes = torch::empty({static_cast<long>(snaps.size()), 2, grid_size, grid_size}, torch::kUInt8);
  auto* dst = bytes.data_ptr<std::uint8_t>();
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    if (snaps[i]->size() != per) throw ShapeMismatch("state snapshot has the wrong size");
    std::copy(snaps[i]->begin(), snaps[i]->end(), dst + i * per);
  }
  return bytes.to(torch::kFloat32);
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw InvalidArgument("replay capacity must be >= 1");
  items_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayMemory::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayMemory::at(std::size_t i) const {
  if (i >= items_.size()) throw BoundsError("replay index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::optional<std::vector<const Transition*>> ReplayMemory::sample(std::size_t batch_size,
                                                                   std::mt19937_64& rng) const {
  if (batch_size == 0 || items_.size() < batch_size) return std::nullopt;
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<const Transition*> out;
  out.reserve(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    std::uniform_int_distribution<std::size_t> u(k, idx.size() - 1);
    std::swap(idx[k], idx[u(rng)]);
    out.push_back(&items_[idx[k]]);
  }
  return out;
}

std::size_t select_action(std::span<const float> q, std::span<const std::uint8_t> mask, double epsilon,
                          std::mt19937_64& rng) {
  if (q.size() != mask.size()) throw ShapeMismatch("q-values and mask differ in length");
  std::size_t n_legal = 0;
  for (auto m : mask) n_legal += m != 0;
  if (n_legal == 0) throw IllegalAction("no legal action available");
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
    std::size_t k = std::uniform_int_distribution<std::size_t>(0, n_legal - 1)(rng);
    for (std::size_t a = 0; a < mask.size(); ++a)
      if (mask[a] && k-- == 0) return a;
  }
  std::size_t best = mask.size();
  for (std::size_t a = 0; a < mask.size(); ++a)
    if (mask[a] && (best == mask.size() || q[a] > q[best])) best = a;
  return best;
}

double bellman_target(double reward, std::span<const float> next_q, std::span<const std::uint8_t> next_mask,
                      bool terminal, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must be in (0, 1]");
  if (terminal) return reward;
  if (next_q.size() != next_mask.size()) throw ShapeMismatch("next q-values and mask differ in length");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < next_q.size(); ++a)
    if (next_mask[a]) best = std::max(best, static_cast<double>(next_q[a]));
  if (!std::isfinite(best)) return reward;
  return reward + gamma * best;
}

torch::Tensor dqn_loss(const torch::Tensor& q_all, const torch::Tensor& actions, const torch::Tensor& targets) {
  const auto q_sa = q_all.gather(1, actions.view({-1, 1})).squeeze(1);
  return torch::mean(torch::square(q_sa - targets.to(q_sa.scalar_type())));
}

double train_step(QNetwork& q, QNetwork& target, torch::optim::Optimizer& opt,
                  std::span<const Transition* const> batch, double gamma) {
  if (batch.empty()) throw InvalidArgument("empty minibatch");
  const int g = q->spec().grid_size;
  const int n_actions = q->spec().n_actions;
  std::vector<const std::vector<std::uint8_t>*> states, next_states;
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    states.push_back(&batch[i]->state);
    if (!batch[i]->terminal) {
      next_states.push_back(&batch[i]->next_state);
      live.push_back(i);
    }
  }
  std::vector<float> y(batch.size());
  std::vector<long> actions(batch.size());
  torch::Tensor next_q;
  if (!live.empty()) {
    torch::NoGradGuard guard;
    next_q = target->forward(snapshots_to_tensor(next_states, g)).contiguous();
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = *batch[i];
    if (t.action >= static_cast<std::size_t>(n_actions)) throw IllegalAction("transition action out of range");
    actions[i] = static_cast<long>(t.action);
    if (t.terminal) {
      y[i] = static_cast<float>(bellman_target(t.reward, {}, {}, true, gamma));
    } else {
      const float* row = next_q.data_ptr<float>() + k * n_actions;
      y[i] = static_cast<float>(
          bellman_target(t.reward, std::span<const float>(row, n_actions), t.next_mask, false, gamma));
      ++k;
    }
  }
  const auto loss = dqn_loss(q->forward(snapshots_to_tensor(states, g)), torch::tensor(actions, torch::kLong),
                             torch::tensor(y, torch::kFloat32));
  opt.zero_grad();
  loss.backward();
  opt.step();
  return loss.item<double>();
}

bool sync_target(QNetwork& q, QNetwork& target, long step, long period) {
  if (period < 1) throw InvalidArgument("sync period must be >= 1");
  if (step % period != 0) return false;
  load_module_state(*target, module_state(*q));
  return true;
}

DqnRun train_dqn(const PlacementEnv& env, std::span<const Pixel> pre_deployed, const DqnConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  torch::manual_seed(cfg.seed);
  const QNetworkSpec spec{env.scene().grid_size(), static_cast<int>(env.n_actions())};
  DqnRun run;
  run.q = QNetwork(spec);
  QNetwork target(spec);
  load_module_state(*target, module_state(*run.q));
  target->eval();
  torch::optim::Adam opt(run.q->parameters(), torch::optim::AdamOptions(cfg.learning_rate));
  ReplayMemory memory(cfg.replay_capacity);
  std::mt19937_64 rng(cfg.seed);

  const auto initial = env.reset(pre_deployed);
  if (!env.has_legal_action(initial)) throw InfeasibleScene("no legal action at episode start");
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const double eps = cfg.epsilon(ep);
    auto s = initial;
    std::vector<double> rewards;
    double loss_sum = 0.0;
    int loss_n = 0;
    while (env.has_legal_action(s) && s.budget_remaining > 0) {
      const auto mask = env.action_mask(s);
      auto snap = state_snapshot(s);
      torch::Tensor qv;
      {
        torch::NoGradGuard guard;
        const std::vector<const std::vector<std::uint8_t>*> one{&snap};
        qv = run.q->forward(snapshots_to_tensor(one, spec.grid_size)).contiguous();
      }
      const auto a = select_action(std::span<const float>(qv.data_ptr<float>(), spec.n_actions), mask, eps, rng);
      auto r = env.step(s, a);
      rewards.push_back(r.reward);
      memory.push({std::move(snap), a, r.reward, state_snapshot(r.next), env.action_mask(r.next), r.terminal});
      ++run.steps;
      if (auto batch = memory.sample(cfg.batch_size, rng)) {
        const double l = train_step(run.q, target, opt, *batch, cfg.gamma);
        if (!std::isfinite(l))
          throw TrainingDiverged("DQN loss became non-finite at step " + std::to_string(run.steps) +
                                 " (episode " + std::to_string(ep) + ")");
        loss_sum += l;
        ++loss_n;
        ++run.train_steps;
      }
      sync_target(run.q, target, run.steps, cfg.target_sync_period);
      s = std::move(r.next);
      if (r.terminal) break;
    }
    run.curve.push_back({ep, episode_return(rewards, cfg.gamma), eps,
                         loss_n ? loss_sum / loss_n : std::numeric_limits<double>::quiet_NaN(),
                         static_cast<int>(rewards.size())});
  }
  run.q->eval();
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

std::string curve_to_csv(std::span<const EpisodeLog> curve) {
  std::ostringstream os;
  os.precision(10);
  os << "episode,return,epsilon,loss\n";
  for (const auto& e : curve) {
    os << e.episode << ',' << e.ret << ',' << e.epsilon << ',';
    if (std::isfinite(e.loss)) os << e.loss;
    os << '\n';
  }
  return os.str();
}

PlacementResult place(const PlacementEnv& env, std::span<const Pixel> pre_deployed, int n_bs, QNetwork& q) {
  if (n_bs < 1) throw InvalidArgument("n_bs must be >= 1");
  if (q->spec().n_actions != static_cast<int>(env.n_actions()) || q->spec().grid_size != env.scene().grid_size())
    throw ShapeMismatch("Q-network was trained on a different action lattice");
  const auto t0 = std::chrono::steady_clock::now();
  torch::NoGradGuard guard;
  q->eval();
  PlacementResult out;
  out.method = "dqn";
  auto s = env.reset(pre_deployed);
  s.budget_remaining = n_bs;
  std::mt19937_64 unused(0);
  for (int t = 0; t < n_bs && env.has_legal_action(s); ++t) {
    const auto snap = state_snapshot(s);
    const std::vector<const std::vector<std::uint8_t>*> one{&snap};
    const auto qv = q->forward(snapshots_to_tensor(one, q->spec().grid_size)).contiguous();
    const auto a = select_action(std::span<const float>(qv.data_ptr<float>(), q->spec().n_actions),
                                 env.action_mask(s), 0.0, unused);
    const auto r = env.step(s, a);
    ++out.evaluations;
    out.placements.push_back(env.action_pixel(a));
    out.trace.push_back({t, a, env.action_pixel(a), r.eval.cr, r.eval.er, r.reward});
    out.cr = r.eval.cr;
    out.er = r.eval.er;
    out.feasible = r.eval.feasible;
    s = r.next;
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void save_dqn(const std::filesystem::path& path, QNetwork& q, const DqnConfig& cfg, const PlacementEnv& env,
              const nlohmann::json& meta) {
  Checkpoint ck;
  ck.kind = "dqn";
  ck.config = {{"dqn", cfg.to_json()},
               {"grid_size", q->spec().grid_size},
               {"n_actions", q->spec().n_actions},
               {"candidate_stride", env.config().candidate_stride},
               {"n_bs_budget", env.config().n_bs_budget}};
  ck.meta = meta;
  ck.meta["seed"] = cfg.seed;
  ck.tensors = module_state(*q);
  save_checkpoint(path, ck);
}

LoadedDqn load_dqn(const std::filesystem::path& path) {
  const auto ck = load_checkpoint(path);
  if (ck.kind != "dqn") throw IoError(path.string() + " is not a DQN checkpoint");
  LoadedDqn out;
  out.q = QNetwork(QNetworkSpec{ck.config.at("grid_size"), ck.config.at("n_actions")});
  load_module_state(*out.q, ck.tensors);
  out.q->eval();
  out.candidate_stride = ck.config.at("candidate_stride");
  out.header = {{"kind", ck.kind}, {"config", ck.config}, {"meta", ck.meta}};
  return out;
}

}  // namespace emfplan
