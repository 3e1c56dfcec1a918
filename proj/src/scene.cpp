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

#include "emfplan/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "emfplan/io.hpp"

namespace emfplan {

SceneSpec::SceneSpec(double side_length_m, int grid_size, BinaryGrid building_raster,
                     std::vector<TxDescriptor> tx_list, std::uint64_t seed)
    : side_length_m_(side_length_m),
      grid_size_(grid_size),
      buildings_(std::move(building_raster)),
      tx_list_(std::move(tx_list)),
      seed_(seed) {
  validate();
}

SceneSpec SceneSpec::empty(int grid_size, double side_length_m) {
  return SceneSpec(side_length_m, grid_size, BinaryGrid(grid_size, grid_size, 0));
}

void SceneSpec::validate() const {
  if (grid_size_ < 16 || !std::has_single_bit(static_cast<unsigned>(grid_size_)))
    throw InvalidArgument("grid_size must be a power of two >= 16, got " +
                          std::to_string(grid_size_));
  if (!(side_length_m_ > 0.0) || !std::isfinite(side_length_m_))
    throw InvalidArgument("side_length_m must be positive");
  if (buildings_.rows() != grid_size_ || buildings_.cols() != grid_size_)
    throw ShapeMismatch("building raster does not match grid_size");
  for (auto v : buildings_.values())
    if (v > 1) throw InvalidArgument("building raster entries must be 0 or 1");
  for (const auto& tx : tx_list_) {
    if (!buildings_.contains(tx.position))
      throw BoundsError("transmitter outside the grid");
    if (buildings_[tx.position] != 0)
      throw InvalidArgument("transmitter at (" + std::to_string(tx.position.row) + "," +
                            std::to_string(tx.position.col) + ") is inside a building");
    if (!(tx.frequency_hz > 0.0)) throw InvalidArgument("carrier frequency must be positive");
  }
}

BinaryGrid SceneSpec::outdoor_mask() const {
  BinaryGrid m(grid_size_, grid_size_);
  for (std::size_t i = 0; i < m.size(); ++i) m.raw()[i] = buildings_.raw()[i] ? 0 : 1;
  return m;
}

std::size_t SceneSpec::outdoor_count() const {
  return static_cast<std::size_t>(std::count(buildings_.raw().begin(), buildings_.raw().end(), 0));
}

SceneSpec SceneSpec::with_transmitters(std::vector<TxDescriptor> tx_list) const {
  return SceneSpec(side_length_m_, grid_size_, buildings_, std::move(tx_list), seed_);
}

SceneSpec SceneSpec::with_transmitters_at(const std::vector<Pixel>& positions, double power_dbm,
                                          double frequency_hz) const {
  std::vector<TxDescriptor> txs;
  txs.reserve(positions.size());
  for (auto p : positions) txs.push_back({p, power_dbm, frequency_hz});
  return with_transmitters(std::move(txs));
}

SceneSpec SceneSpec::mirrored_horizontal() const {
  auto txs = tx_list_;
  for (auto& t : txs) t.position.col = grid_size_ - 1 - t.position.col;
  return SceneSpec(side_length_m_, grid_size_, flip_horizontal(buildings_), std::move(txs), seed_);
}

SceneSpec SceneSpec::mirrored_vertical() const {
  auto txs = tx_list_;
  for (auto& t : txs) t.position.row = grid_size_ - 1 - t.position.row;
  return SceneSpec(side_length_m_, grid_size_, flip_vertical(buildings_), std::move(txs), seed_);
}

bool operator==(const SceneSpec& a, const SceneSpec& b) {
  if (a.side_length_m_ != b.side_length_m_ || a.grid_size_ != b.grid_size_ ||
      a.seed_ != b.seed_ || a.buildings_ != b.buildings_ || a.tx_list_.size() != b.tx_list_.size())
    return false;
  for (std::size_t i = 0; i < a.tx_list_.size(); ++i) {
    const auto& x = a.tx_list_[i];
    const auto& y = b.tx_list_[i];
    if (x.position != y.position || x.power_dbm != y.power_dbm ||
        x.frequency_hz != y.frequency_hz || x.antenna != y.antenna)
      return false;
  }
  return true;
}

SceneSpec generate_scene(std::uint64_t seed, int n_buildings, const SceneGenOptions& opts) {
  const int n = opts.grid_size;
  if (n_buildings < 0) throw InvalidArgument("n_buildings must be >= 0");
  if (opts.size.min_px < 1 || opts.size.max_px < opts.size.min_px || opts.size.max_px > n)
    throw InvalidArgument("building size range does not fit inside the grid");

  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt));
    std::uniform_int_distribution<int> side(opts.size.min_px, opts.size.max_px);
    BinaryGrid raster(n, n, 0);
    for (int b = 0; b < n_buildings; ++b) {
      const int h = side(rng);
      const int w = side(rng);
      const int r0 = std::uniform_int_distribution<int>(0, n - h)(rng);
      const int c0 = std::uniform_int_distribution<int>(0, n - w)(rng);
      for (int r = r0; r < r0 + h; ++r)
        for (int c = c0; c < c0 + w; ++c) raster(r, c) = 1;
    }
    const auto outdoor = std::count(raster.raw().begin(), raster.raw().end(), 0);
    if (static_cast<double>(outdoor) >= opts.min_outdoor_fraction * static_cast<double>(n) * n)
      return SceneSpec(opts.side_length_m, n, std::move(raster), {}, seed);
  }
  throw InfeasibleScene("scene generation left fewer than " +
                        std::to_string(static_cast<int>(opts.min_outdoor_fraction * 100)) +
                        "% outdoor pixels after " + std::to_string(opts.max_retries) + " retries");
}

PointM px_to_m(const SceneSpec& scene, Pixel p) {
  if (!scene.contains(p)) throw BoundsError("pixel outside the grid");
  const double res = scene.resolution_m();
  return {(p.row + 0.5) * res, (p.col + 0.5) * res};
}

Pixel m_to_px(const SceneSpec& scene, PointM p) {
  const double side = scene.side_length_m();
  if (!(p.x >= 0.0 && p.x < side && p.y >= 0.0 && p.y < side))
    throw BoundsError("point outside the region of interest");
  const double res = scene.resolution_m();
  const int n = scene.grid_size();
  return {std::min(static_cast<int>(std::floor(p.x / res)), n - 1),
          std::min(static_cast<int>(std::floor(p.y / res)), n - 1)};
}

namespace {
std::vector<Pixel> lattice(const BinaryGrid& allowed, int stride) {
  if (stride < 1) throw InvalidArgument("candidate stride must be >= 1");
  std::vector<Pixel> out;
  for (int r = 0; r < allowed.rows(); r += stride)
    for (int c = 0; c < allowed.cols(); c += stride)
      if (allowed(r, c)) out.push_back({r, c});
  if (out.empty()) throw InfeasibleScene("no deployable candidate on the stride lattice");
  return out;
}
}  // namespace

std::vector<Pixel> deployable_candidates(const SceneSpec& scene, int stride) {
  return lattice(scene.outdoor_mask(), stride);
}

DeployableSet::DeployableSet(const SceneSpec& scene, int candidate_stride,
                             std::optional<BinaryGrid> mask)
    : mask_(mask ? std::move(*mask) : scene.outdoor_mask()), stride_(candidate_stride) {
  if (!mask_.same_shape(scene.buildings())) throw ShapeMismatch("deployable mask shape");
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (scene.buildings().raw()[i]) mask_.raw()[i] = 0;
  candidates_ = lattice(mask_, stride_);
}

std::optional<std::size_t> DeployableSet::index_of(Pixel p) const {
  auto it = std::lower_bound(candidates_.begin(), candidates_.end(), p);
  if (it == candidates_.end() || *it != p) return std::nullopt;
  return static_cast<std::size_t>(it - candidates_.begin());
}

void save_scene(const SceneSpec& scene, const std::filesystem::path& manifest_path) {
  const auto png_name = manifest_path.stem().string() + "_buildings.png";
  BinaryGrid img(scene.grid_size(), scene.grid_size());
  for (std::size_t i = 0; i < img.size(); ++i)
    img.raw()[i] = scene.buildings().raw()[i] ? 255 : 0;
  io::write_png_gray(manifest_path.parent_path() / png_name, img);

  nlohmann::json tx = nlohmann::json::array();
  for (const auto& t : scene.transmitters())
    tx.push_back({{"row", t.position.row},
                  {"col", t.position.col},
                  {"power_dbm", t.power_dbm},
                  {"frequency_hz", t.frequency_hz},
                  {"antenna", "isotropic-vertical"}});
  nlohmann::json j = {{"side_length_m", scene.side_length_m()},
                      {"grid_size", scene.grid_size()},
                      {"seed", scene.seed()},
                      {"tx_list", tx},
                      {"building_file", png_name}};
  io::write_text(manifest_path, j.dump(2));
}

SceneSpec load_scene(const std::filesystem::path& manifest_path) {
  const auto j = nlohmann::json::parse(io::read_text(manifest_path));
  const auto img = io::read_png_gray(manifest_path.parent_path() /
                                     j.at("building_file").get<std::string>());
  BinaryGrid raster(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const auto v = img.raw()[i];
    if (v != 0 && v != 255) throw IoError("building PNG must contain only 0 and 255");
    raster.raw()[i] = v ? 1 : 0;
  }
  std::vector<TxDescriptor> txs;
  for (const auto& t : j.value("tx_list", nlohmann::json::array())) {
    TxDescriptor d;
    d.position = {t.at("row").get<int>(), t.at("col").get<int>()};
    d.power_dbm = t.value("power_dbm", 0.0);
    d.frequency_hz = t.value("frequency_hz", 3.5e9);
    txs.push_back(d);
  }
  return SceneSpec(j.at("side_length_m").get<double>(), j.at("grid_size").get<int>(),
                   std::move(raster), std::move(txs), j.value("seed", std::uint64_t{0}));
}

}  // namespace emfplan
