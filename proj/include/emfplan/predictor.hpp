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

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "emfplan/propagation.hpp"
#include "emfplan/scene.hpp"

namespace emfplan {

/// Source of (RSS, exposure) maps for a scene geometry and a set of BS sites.
/// Sites use the default TxDescriptor (0 dBm, 3.5 GHz, isotropic); any
/// transmitters already on the scene are ignored. Implementations must be
/// safe for concurrent calls.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  virtual RadioMaps predict(const SceneSpec& scene, std::span<const Pixel> sites) const = 0;
  /// One map pair per configuration. The default loops over predict().
  virtual std::vector<RadioMaps> predict_batch(const SceneSpec& scene,
                                               std::span<const std::vector<Pixel>> configs) const;
};

/// Ray-free propagation model evaluated directly. Per-site fields are cached
/// (keyed by geometry fingerprint and site) so repeated multi-site queries
/// only pay for the combination step.
class OraclePredictor final : public Predictor {
 public:
  explicit OraclePredictor(PropagationParams params = {}, std::size_t cache_bytes = 512u << 20);

  std::string name() const override { return "oracle"; }
  RadioMaps predict(const SceneSpec& scene, std::span<const Pixel> sites) const override;
  const PropagationParams& params() const noexcept { return params_; }
  std::size_t cached_fields() const;

 private:
  std::shared_ptr<const TxField> field(const SceneSpec& scene, std::uint64_t fingerprint, Pixel site) const;

  PropagationParams params_;
  std::size_t cache_bytes_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<std::uint64_t, Pixel>, std::shared_ptr<const TxField>> cache_;
  mutable std::size_t used_bytes_ = 0;
};

/// FNV-1a over grid size, side length and the building raster.
std::uint64_t geometry_fingerprint(const SceneSpec& scene);

}  // namespace emfplan
