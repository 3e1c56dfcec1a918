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

#include <filesystem>
#include <optional>
#include <span>

#include "emfplan/grid.hpp"
#include "emfplan/scene.hpp"

namespace emfplan {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kPi = 3.14159265358979323846;

/// Multi-wall free-space propagation law used as the reference oracle.
struct PropagationParams {
  double wall_loss_db = 10.0;
  /// Distance clamp; unset means half a pixel.
  std::optional<double> d_min_m;
  double rx_gain_dbi = 2.15;
  double impedance_ohm = 376.73;
  /// Maps never go below these floors (also what a transmitter-free scene yields).
  double rss_floor_dbm = -150.0;
  double exposure_floor_dbuv = 0.0;

  double effective_d_min(const SceneSpec& scene) const {
    return d_min_m.value_or(0.5 * scene.resolution_m());
  }
  void validate() const;
};

/// Best-server RSS and aggregate exposure for one transmitter configuration.
struct RadioMaps {
  DoubleGrid rss_dbm;
  DoubleGrid exposure_dbuv;
  BinaryGrid valid_mask;  // 1 = outdoor / measurable
};

/// Free-space path loss in dB, 20 log10(4 pi d f / c).
double fspl_db(double distance_m, double frequency_hz);

/// Number of distinct buildings entered along the DDA line between pixel
/// centers a and b. Symmetric in (a, b) and equivariant under grid mirrors.
int wall_crossings(Pixel a, Pixel b, const BinaryGrid& buildings);

/// Path gain (negative loss) in dB from the transmitter to pixel p.
double path_gain_db(const TxDescriptor& tx, Pixel p, const SceneSpec& scene,
                    const PropagationParams& params);

/// Per-transmitter contribution, cacheable across configurations.
struct TxField {
  Pixel position;
  DoubleGrid rx_power_dbm;       // power + rx gain + path gain
  DoubleGrid power_density_wm2;  // incident power density
};

TxField compute_tx_field(const SceneSpec& scene, const TxDescriptor& tx,
                         const PropagationParams& params);

/// Combines fields in the given order; equals compute_maps for the same set.
RadioMaps combine_fields(const SceneSpec& scene, std::span<const TxField* const> fields,
                         const PropagationParams& params);

RadioMaps compute_maps(const SceneSpec& scene, const PropagationParams& params = {});

/// `dir/{rss_dbm,exposure_dbuv,valid_mask}.f32` with JSON sidecars.
void save_maps(const RadioMaps& maps, const std::filesystem::path& dir);
RadioMaps load_maps(const std::filesystem::path& dir);

/// 20 log10(E / 1 uV/m).
double field_to_dbuv(double e_v_per_m);

}  // namespace emfplan
