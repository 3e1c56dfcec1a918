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

#include <algorithm>
#include <map>
#include <memory>

#include "emfplan/placement_env.hpp"

namespace emfplan::testing {

// Coverage is a fixed fraction per site (the best of the deployed sites);
// exposure is always compliant. Site (0, 8) dominates.
class DominantSitePredictor final : public Predictor {
 public:
  std::string name() const override { return "toy"; }
  RadioMaps predict(const SceneSpec& scene, std::span<const Pixel> sites) const override {
    const int n = scene.grid_size();
    RadioMaps m{DoubleGrid(n, n, -150.0), DoubleGrid(n, n, 10.0), scene.outdoor_mask()};
    double frac = 0.0;
    for (Pixel p : sites) frac = std::max(frac, fraction(p));
    const auto want = static_cast<std::size_t>(frac * static_cast<double>(scene.outdoor_count()) + 0.5);
    std::size_t k = 0;
    for (std::size_t i = 0; i < m.rss_dbm.size() && k < want; ++i)
      if (m.valid_mask.raw()[i]) {
        m.rss_dbm.raw()[i] = -90.0;
        ++k;
      }
    return m;
  }

  static double fraction(Pixel p) {
    if (p == Pixel{0, 8}) return 0.9;
    if (p == Pixel{0, 0}) return 0.3;
    return 0.2;
  }
};

// 16x16 scene with one building pixel on (8, 8): a stride-8 lattice leaves
// three candidates (0,0), (0,8), (8,0); the dominant one is action 1.
inline PlacementEnv dominant_action_env() {
  BinaryGrid b(16, 16, 0);
  b(8, 8) = 1;
  EnvConfig cfg;
  cfg.candidate_stride = 8;
  cfg.n_bs_budget = 1;
  return PlacementEnv(SceneSpec(800.0, 16, b), std::make_shared<DominantSitePredictor>(), cfg);
}

inline constexpr std::size_t kDominantAction = 1;

}  // namespace emfplan::testing
