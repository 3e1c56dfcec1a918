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

#include "emfplan/baselines.hpp"

#include <algorithm>
#include <chrono>

#include "emfplan/error.hpp"

namespace emfplan {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Pixel> free_candidates(const PlacementEnv& env, std::span<const Pixel> pre) {
  std::vector<Pixel> out;
  for (Pixel p : env.lattice().candidates())
    if (std::find(pre.begin(), pre.end(), p) == pre.end()) out.push_back(p);
  return out;
}

/// True when (cr, feasible) beats the incumbent; feasibility dominates.
bool better(double cr, bool feasible, double best_cr, bool best_feasible, bool have) {
  if (!have) return true;
  if (feasible != best_feasible) return feasible;
  return cr > best_cr;
}

}  // namespace

nlohmann::json to_json(const PlacementResult& r) {
  nlohmann::json sites = nlohmann::json::array();
  for (Pixel p : r.placements) sites.push_back({{"row", p.row}, {"col", p.col}});
  nlohmann::json j = {{"method", r.method},       {"placements", sites},       {"CR", r.cr},
          {"ER", r.er},               {"feasible", r.feasible},    {"evals", r.evaluations},
          {"wall_time_s", r.wall_time_s}};
  if (!r.trace.empty()) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& t : r.trace)
      steps.push_back({{"step", t.step}, {"action", t.action}, {"row", t.site.row}, {"col", t.site.col},
                       {"CR", t.cr}, {"ER", t.er}, {"reward", t.reward}});
    j["per_step"] = steps;
  }
  return j;
}

int stride_for_limit(const SceneSpec& scene, std::size_t limit) {
  for (int s = 1; s <= scene.grid_size(); ++s) {
    std::size_t n = 0;
    for (int r = 0; r < scene.grid_size(); r += s)
      for (int c = 0; c < scene.grid_size(); c += s) n += scene.buildings()(r, c) == 0;
    if (n <= limit) return s;
  }
  return scene.grid_size();
}

PlacementResult random_search(const PlacementEnv& env, std::span<const Pixel> pre_deployed, int n_bs,
                              int trials, std::mt19937_64& rng) {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (n_bs < 1) throw InvalidArgument("n_bs must be >= 1");
  const auto t0 = Clock::now();
  const auto cands = free_candidates(env, pre_deployed);
  if (cands.size() < static_cast<std::size_t>(n_bs)) throw InfeasibleScene("not enough candidate sites");

  PlacementResult best;
  best.method = "random";
  bool have = false;
  std::vector<Pixel> sites(pre_deployed.begin(), pre_deployed.end());
  for (int t = 0; t < trials; ++t) {
    std::vector<std::size_t> idx(cands.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // Partial Fisher-Yates: the first n_bs entries are a uniform draw without replacement.
    std::vector<Pixel> pick;
    for (int k = 0; k < n_bs; ++k) {
      std::uniform_int_distribution<std::size_t> u(k, idx.size() - 1);
      std::swap(idx[k], idx[u(rng)]);
      pick.push_back(cands[idx[k]]);
    }
    sites.resize(pre_deployed.size());
    sites.insert(sites.end(), pick.begin(), pick.end());
    const auto e = env.evaluate(sites);
    ++best.evaluations;
    if (better(e.cr, e.feasible, best.cr, best.feasible, have)) {
      have = true;
      best.placements = pick;
      best.cr = e.cr;
      best.er = e.er;
      best.feasible = e.feasible;
    }
  }
  best.wall_time_s = seconds_since(t0);
  return best;
}

PlacementResult brute_force(const PlacementEnv& env, std::span<const Pixel> pre_deployed, int n_bs,
                            const BruteForceOptions& opts) {
  if (n_bs != 1 && n_bs != 2) throw InvalidArgument("brute force supports n_bs in {1, 2}");
  if (env.lattice().size() > opts.candidate_limit) {
    const int hint = stride_for_limit(env.scene(), opts.candidate_limit);
    throw SearchTooLarge("candidate set of " + std::to_string(env.lattice().size()) + " exceeds limit " +
                         std::to_string(opts.candidate_limit) + "; use candidate stride >= " +
                         std::to_string(hint));
  }
  const auto t0 = Clock::now();
  const auto cands = free_candidates(env, pre_deployed);
  if (cands.size() < static_cast<std::size_t>(n_bs)) throw InfeasibleScene("not enough candidate sites");

  std::vector<std::vector<Pixel>> configs;
  if (n_bs == 1) {
    for (Pixel a : cands) configs.push_back({a});
  } else {
    configs.reserve(cands.size() * (cands.size() - 1) / 2);
    for (std::size_t i = 0; i < cands.size(); ++i)
      for (std::size_t j = i + 1; j < cands.size(); ++j) configs.push_back({cands[i], cands[j]});
  }

  PlacementResult best;
  best.method = "brute_force";
  bool have = false;
  const std::size_t batch = std::max<std::size_t>(opts.batch, 1);
  std::vector<std::vector<Pixel>> chunk;
  for (std::size_t start = 0; start < configs.size(); start += batch) {
    const std::size_t end = std::min(configs.size(), start + batch);
    chunk.clear();
    for (std::size_t k = start; k < end; ++k) {
      std::vector<Pixel> sites(pre_deployed.begin(), pre_deployed.end());
      sites.insert(sites.end(), configs[k].begin(), configs[k].end());
      chunk.push_back(std::move(sites));
    }
    const auto maps = env.predictor().predict_batch(env.scene(), chunk);
    for (std::size_t k = start; k < end; ++k) {
      const auto e = env.evaluate_maps(maps[k - start]);
      ++best.evaluations;
      if (better(e.cr, e.feasible, best.cr, best.feasible, have)) {
        have = true;
        best.placements = configs[k];
        best.cr = e.cr;
        best.er = e.er;
        best.feasible = e.feasible;
      }
    }
  }
  best.wall_time_s = seconds_since(t0);
  return best;
}

}  // namespace emfplan
