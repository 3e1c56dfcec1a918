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

#include "emfplan/placement_env.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "emfplan/error.hpp"
#include "emfplan/io.hpp"

namespace emfplan {

void EnvConfig::validate() const {
  if (n_bs_budget < 1) throw InvalidArgument("n_bs_budget must be >= 1");
  if (!(penalty < 0.0)) throw InvalidArgument("penalty must be negative");
  if (candidate_stride < 1) throw InvalidArgument("candidate_stride must be >= 1");
  thresholds.validate();
}

double gated_reward(double cr, double er, const Thresholds& t, double penalty) {
  return er >= t.lambda_er ? cr : penalty;
}

double episode_return(std::span<const double> rewards, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must be in (0, 1]");
  double r = 0.0;
  double w = 1.0;
  for (double x : rewards) {
    r += w * x;
    w *= gamma;
  }
  return r;
}

PlacementEnv::PlacementEnv(SceneSpec scene, std::shared_ptr<const Predictor> predictor, EnvConfig config,
                           std::optional<BinaryGrid> deploy_mask)
    : scene_(std::move(scene)),
      predictor_(std::move(predictor)),
      config_(config),
      lattice_(scene_, config.candidate_stride, std::move(deploy_mask)),
      outdoor_(scene_.outdoor_mask()) {
  if (!predictor_) throw InvalidArgument("environment needs a predictor");
  config_.validate();
}

Evaluation PlacementEnv::evaluate_maps(const RadioMaps& maps) const {
  Evaluation e;
  e.cr = coverage_rate(maps.rss_dbm, outdoor_, config_.thresholds.phi_dbm);
  e.er = exposure_rate(maps.exposure_dbuv, outdoor_, config_.thresholds.gamma_dbuv);
  e.feasible = e.er >= config_.thresholds.lambda_er;
  return e;
}

Evaluation PlacementEnv::evaluate(std::span<const Pixel> sites) const {
  return evaluate_maps(predictor_->predict(scene_, sites));
}

DeploymentState PlacementEnv::reset(std::span<const Pixel> pre_deployed) const {
  DeploymentState s;
  const int n = scene_.grid_size();
  s.building_channel = outdoor_;
  s.coverage_channel = BinaryGrid(n, n, 0);
  for (std::size_t i = 0; i < pre_deployed.size(); ++i) {
    const Pixel p = pre_deployed[i];
    if (!scene_.contains(p)) throw BoundsError("pre-deployed site outside the scene");
    if (!lattice_.deployable(p)) throw InvalidArgument("pre-deployed site is not deployable");
    if (std::find(pre_deployed.begin(), pre_deployed.begin() + i, p) != pre_deployed.begin() + i)
      throw InvalidArgument("duplicate pre-deployed site");
  }
  s.deployed.assign(pre_deployed.begin(), pre_deployed.end());
  s.n_pre_deployed = pre_deployed.size();
  s.budget_remaining = config_.n_bs_budget;
  if (!pre_deployed.empty()) {
    const auto maps = predictor_->predict(scene_, pre_deployed);
    s.coverage_channel = coverage_indicator(maps.rss_dbm, config_.thresholds.phi_dbm);
    const auto e = evaluate_maps(maps);
    s.cr = e.cr;
    s.er = e.er;
  }
  return s;
}

std::vector<std::uint8_t> PlacementEnv::action_mask(const DeploymentState& s) const {
  std::vector<std::uint8_t> mask(lattice_.size(), 1);
  for (Pixel p : s.deployed)
    if (auto idx = lattice_.index_of(p)) mask[*idx] = 0;
  return mask;
}

bool PlacementEnv::has_legal_action(const DeploymentState& s) const {
  const auto m = action_mask(s);
  return std::find(m.begin(), m.end(), std::uint8_t{1}) != m.end();
}

StepResult PlacementEnv::step(const DeploymentState& s, std::size_t action) const {
  if (action >= lattice_.size()) throw IllegalAction("action index out of range");
  if (s.budget_remaining <= 0) throw IllegalAction("episode budget exhausted");
  const Pixel site = lattice_.candidates()[action];
  if (std::find(s.deployed.begin(), s.deployed.end(), site) != s.deployed.end())
    throw IllegalAction("action is masked (site already deployed)");

  StepResult r;
  r.next = s;
  r.next.deployed.push_back(site);
  r.next.budget_remaining = s.budget_remaining - 1;
  const auto maps = predictor_->predict(scene_, r.next.deployed);
  r.eval = evaluate_maps(maps);
  r.next.coverage_channel = coverage_indicator(maps.rss_dbm, config_.thresholds.phi_dbm);
  r.next.cr = r.eval.cr;
  r.next.er = r.eval.er;
  r.reward = gated_reward(r.eval.cr, r.eval.er, config_.thresholds, config_.penalty);
  if (r.next.budget_remaining == 0) {
    r.terminal = true;
  } else if (!has_legal_action(r.next)) {
    r.terminal = true;
    r.infeasible_terminal = true;
  }
  return r;
}

std::string trace_to_jsonl(std::span<const TraceRecord> trace) {
  std::ostringstream os;
  for (const auto& t : trace) {
    nlohmann::json j = {{"step", t.step},   {"action", t.action}, {"row", t.site.row},
                        {"col", t.site.col}, {"CR", t.cr},         {"ER", t.er},
                        {"reward", t.reward}};
    os << j.dump() << '\n';
  }
  return os.str();
}

void write_trace(const std::filesystem::path& path, std::span<const TraceRecord> trace) {
  io::write_text(path, trace_to_jsonl(trace));
}

}  // namespace emfplan
