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
#include <filesystem>
#include <optional>
#include <vector>

#include "emfplan/grid.hpp"

namespace emfplan {

/// Physical point in meters, origin at the grid's (0,0) corner; x follows
/// the row axis, y the column axis.
struct PointM {
  double x = 0.0;
  double y = 0.0;
};

enum class AntennaType { kIsotropicVertical };

struct TxDescriptor {
  Pixel position;
  double power_dbm = 0.0;
  double frequency_hz = 3.5e9;
  AntennaType antenna = AntennaType::kIsotropicVertical;
};

/// Square region of interest rasterized to grid_size x grid_size pixels.
/// Validated on construction and immutable afterwards.
class SceneSpec {
 public:
  SceneSpec() = default;
  SceneSpec(double side_length_m, int grid_size, BinaryGrid building_raster,
            std::vector<TxDescriptor> tx_list = {}, std::uint64_t seed = 0);

  /// All-outdoor scene.
  static SceneSpec empty(int grid_size = 128, double side_length_m = 800.0);

  double side_length_m() const noexcept { return side_length_m_; }
  int grid_size() const noexcept { return grid_size_; }
  double resolution_m() const noexcept { return side_length_m_ / grid_size_; }
  const BinaryGrid& buildings() const noexcept { return buildings_; }
  const std::vector<TxDescriptor>& transmitters() const noexcept { return tx_list_; }
  std::uint64_t seed() const noexcept { return seed_; }

  bool is_building(Pixel p) const { return buildings_.at(p) != 0; }
  bool contains(Pixel p) const noexcept { return buildings_.contains(p); }

  /// Outdoor mask: 1 where users can be located.
  BinaryGrid outdoor_mask() const;
  std::size_t outdoor_count() const;

  /// Same geometry with a different transmitter set (validated).
  SceneSpec with_transmitters(std::vector<TxDescriptor> tx_list) const;
  /// Same geometry with isotropic default transmitters at `positions`.
  SceneSpec with_transmitters_at(const std::vector<Pixel>& positions,
                                 double power_dbm = 0.0, double frequency_hz = 3.5e9) const;

  /// Buildings and transmitters mirrored across the vertical/horizontal axis.
  SceneSpec mirrored_horizontal() const;
  SceneSpec mirrored_vertical() const;

  friend bool operator==(const SceneSpec& a, const SceneSpec& b);

 private:
  void validate() const;

  double side_length_m_ = 800.0;
  int grid_size_ = 0;
  BinaryGrid buildings_;
  std::vector<TxDescriptor> tx_list_;
  std::uint64_t seed_ = 0;
};

/// Inclusive rectangle side-length range in pixels.
struct BuildingSizeRange {
  int min_px = 4;
  int max_px = 16;
};

struct SceneGenOptions {
  int grid_size = 128;
  double side_length_m = 800.0;
  BuildingSizeRange size;
  int max_retries = 16;
  double min_outdoor_fraction = 0.25;
};

/// Procedural scene of axis-aligned (possibly overlapping) rectangular
/// buildings. Deterministic in `seed`; throws InfeasibleScene if fewer than
/// `min_outdoor_fraction` pixels remain outdoor after `max_retries` draws.
SceneSpec generate_scene(std::uint64_t seed, int n_buildings, const SceneGenOptions& opts = {});

/// Pixel center in meters.
PointM px_to_m(const SceneSpec& scene, Pixel p);
/// Pixel containing the point; throws BoundsError outside the region.
Pixel m_to_px(const SceneSpec& scene, PointM p);

/// Outdoor pixels on the stride lattice, row-major. Throws InfeasibleScene
/// when empty.
std::vector<Pixel> deployable_candidates(const SceneSpec& scene, int stride);

/// Permissible BS sites and the action lattice derived from them.
class DeployableSet {
 public:
  /// Mask defaults to the scene's outdoor pixels.
  DeployableSet(const SceneSpec& scene, int candidate_stride,
                std::optional<BinaryGrid> mask = std::nullopt);

  const BinaryGrid& mask() const noexcept { return mask_; }
  int candidate_stride() const noexcept { return stride_; }
  const std::vector<Pixel>& candidates() const noexcept { return candidates_; }
  std::size_t size() const noexcept { return candidates_.size(); }

  /// Index of `p` in the candidate list, if present.
  std::optional<std::size_t> index_of(Pixel p) const;
  bool deployable(Pixel p) const { return mask_.contains(p) && mask_[p] != 0; }

 private:
  BinaryGrid mask_;
  int stride_ = 1;
  std::vector<Pixel> candidates_;
};

/// Scene manifest (JSON) with the building raster in a sibling 8-bit PNG.
void save_scene(const SceneSpec& scene, const std::filesystem::path& manifest_path);
SceneSpec load_scene(const std::filesystem::path& manifest_path);

}  // namespace emfplan
