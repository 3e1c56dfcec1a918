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

#include "emfplan/predictor.hpp"

#include "emfplan/error.hpp"

namespace emfplan {

std::vector<RadioMaps> Predictor::predict_batch(const SceneSpec& scene,
                                                std::span<const std::vector<Pixel>> configs) const {
  std::vector<RadioMaps> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(predict(scene, c));
  return out;
}

std::uint64_t geometry_fingerprint(const SceneSpec& scene) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const int g = scene.grid_size();
  const double side = scene.side_length_m();
  mix(&g, sizeof g);
  mix(&side, sizeof side);
  mix(scene.buildings().raw().data(), scene.buildings().size());
  return h;
}

OraclePredictor::OraclePredictor(PropagationParams params, std::size_t cache_bytes)
    : params_(params), cache_bytes_(cache_bytes) {
  params_.validate();
}

std::size_t OraclePredictor::cached_fields() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

std::shared_ptr<const TxField> OraclePredictor::field(const SceneSpec& scene, std::uint64_t fingerprint,
                                                      Pixel site) const {
  const auto key = std::make_pair(fingerprint, site);
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  TxDescriptor tx;
  tx.position = site;
  auto f = std::make_shared<const TxField>(compute_tx_field(scene, tx, params_));
  const std::size_t bytes = 2 * sizeof(double) * scene.buildings().size();
  std::lock_guard lock(mu_);
  if (used_bytes_ + bytes > cache_bytes_) {
    cache_.clear();
    used_bytes_ = 0;
  }
  if (cache_.emplace(key, f).second) used_bytes_ += bytes;
  return f;
}

RadioMaps OraclePredictor::predict(const SceneSpec& scene, std::span<const Pixel> sites) const {
  const auto fp = geometry_fingerprint(scene);
  std::vector<std::shared_ptr<const TxField>> held;
  std::vector<const TxField*> ptrs;
  held.reserve(sites.size());
  for (Pixel p : sites) {
    if (!scene.contains(p)) throw BoundsError("site outside the scene");
    if (scene.is_building(p)) throw InvalidArgument("site on a building pixel");
    held.push_back(field(scene, fp, p));
    ptrs.push_back(held.back().get());
  }
  return combine_fields(scene, ptrs, params_);
}

}  // namespace emfplan
