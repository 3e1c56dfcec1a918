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

#include <array>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <utility>
#include <vector>

#include "emfplan/grid.hpp"
#include "emfplan/propagation.hpp"
#include "emfplan/scene.hpp"

namespace emfplan {

enum class MapChannel { kRss = 0, kExposure = 1 };

/// dB clip ranges mapped affinely onto [-1, 1].
struct EncodingSpec {
  double rss_floor_dbm = -150.0;
  double rss_ceil_dbm = -63.2;  // 4.77e-10 W
  double exp_floor_dbuv = 0.0;
  double exp_ceil_dbuv = 120.0;

  double floor(MapChannel ch) const { return ch == MapChannel::kRss ? rss_floor_dbm : exp_floor_dbuv; }
  double ceil(MapChannel ch) const { return ch == MapChannel::kRss ? rss_ceil_dbm : exp_ceil_dbuv; }
  double range(MapChannel ch) const { return ceil(ch) - floor(ch); }
  void validate() const;
};

double normalize(double db, MapChannel ch, const EncodingSpec& enc = {});
double denormalize(double v, MapChannel ch, const EncodingSpec& enc = {});
FloatGrid normalize(const DoubleGrid& db, MapChannel ch, const EncodingSpec& enc = {});
DoubleGrid denormalize(const FloatGrid& v, MapChannel ch, const EncodingSpec& enc = {});

/// Replaces every invalid pixel by its nearest valid pixel (Euclidean, ties
/// to the lowest row-major index). Throws if no pixel is valid.
DoubleGrid fill_missing(const DoubleGrid& values, const BinaryGrid& valid);

enum class Flip : std::uint8_t { kNone = 0, kHorizontal = 1, kVertical = 2, kBoth = 3 };

/// One training pair. input[0] = outdoor map (buildings 0), input[1] = TX
/// map; target = normalized (RSS, exposure).
struct Sample {
  std::array<FloatGrid, 2> input;
  std::array<FloatGrid, 2> target;
  std::size_t base_id = 0;
  Flip flip = Flip::kNone;

  int size() const { return input[0].rows(); }
  BinaryGrid valid_mask() const;
};

/// Encodes oracle maps for a scene (invalid pixels filled, then normalized).
Sample make_sample(const SceneSpec& scene, const RadioMaps& maps, std::size_t base_id,
                   const EncodingSpec& enc = {});
/// Input-only sample for inference (targets left empty).
Sample make_input(const SceneSpec& scene);

Sample flip_sample(const Sample& s, Flip f);

/// Originals followed by horizontal and vertical flips (and the 180 degree
/// variant when `include_both`).
std::vector<Sample> augment(const std::vector<Sample>& samples, bool include_both = false);

struct SplitResult {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

/// Seeded split at base-sample granularity: floor(B * (1 - val_ratio)) base
/// ids go to train (clamped so both sides are non-empty), the rest to test;
/// all variants of a base sample stay together.
SplitResult split(const std::vector<Sample>& samples, double val_ratio, std::uint64_t seed);

struct DatasetOptions {
  int n_scenes = 500;
  int tx_min = 1;
  int tx_max = 1;
  std::uint64_t seed = 0;
  int grid_size = 64;
  double side_length_m = 800.0;
  int buildings_min = 6;
  int buildings_max = 16;
  BuildingSizeRange building_size{4, 12};
  PropagationParams propagation;
  EncodingSpec encoding;
};

nlohmann::json options_to_json(const DatasetOptions& o);

struct SampleRecord {
  std::size_t id = 0;
  std::uint64_t scene_seed = 0;
  int n_buildings = 0;
  std::vector<Pixel> tx;
  std::string file;
};

struct DatasetManifest {
  DatasetOptions options;
  std::vector<SampleRecord> samples;
  int skipped_infeasible = 0;
};

/// Generates `n_scenes` base samples into `dir` (manifest.json + one
/// float32 file per sample holding the 4 channels building, tx, rss, exposure).
DatasetManifest generate_dataset(const DatasetOptions& opts, const std::filesystem::path& dir);

/// Regenerates the scene of a manifest record (buildings + transmitters).
SceneSpec scene_for_record(const DatasetOptions& opts, const SampleRecord& rec);

DatasetManifest load_manifest(const std::filesystem::path& dir);
std::vector<Sample> load_samples(const std::filesystem::path& dir, const DatasetManifest& manifest);

}  // namespace emfplan
