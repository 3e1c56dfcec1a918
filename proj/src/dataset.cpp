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

#include "emfplan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "emfplan/io.hpp"

namespace emfplan {

void EncodingSpec::validate() const {
  if (!(rss_floor_dbm < rss_ceil_dbm) || !(exp_floor_dbuv < exp_ceil_dbuv))
    throw InvalidArgument("encoding floor must be below ceiling");
}

double normalize(double db, MapChannel ch, const EncodingSpec& enc) {
  const double lo = enc.floor(ch);
  const double hi = enc.ceil(ch);
  const double clipped = std::clamp(db, lo, hi);
  return 2.0 * (clipped - lo) / (hi - lo) - 1.0;
}

double denormalize(double v, MapChannel ch, const EncodingSpec& enc) {
  const double lo = enc.floor(ch);
  const double hi = enc.ceil(ch);
  return lo + (std::clamp(v, -1.0, 1.0) + 1.0) * 0.5 * (hi - lo);
}

FloatGrid normalize(const DoubleGrid& db, MapChannel ch, const EncodingSpec& enc) {
  FloatGrid out(db.rows(), db.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.raw()[i] = static_cast<float>(normalize(db.raw()[i], ch, enc));
  return out;
}

DoubleGrid denormalize(const FloatGrid& v, MapChannel ch, const EncodingSpec& enc) {
  DoubleGrid out(v.rows(), v.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] = denormalize(v.raw()[i], ch, enc);
  return out;
}

DoubleGrid fill_missing(const DoubleGrid& values, const BinaryGrid& valid) {
  if (!values.same_shape(valid)) throw ShapeMismatch("fill_missing mask shape");
  if (std::none_of(valid.raw().begin(), valid.raw().end(), [](auto v) { return v != 0; }))
    throw InvalidArgument("fill_missing needs at least one valid pixel");

  DoubleGrid out = values;
  const int rows = values.rows();
  const int cols = values.cols();
  const int max_radius = std::max(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (valid(r, c)) continue;
      long best_d2 = std::numeric_limits<long>::max();
      std::size_t best_idx = 0;
      auto consider = [&](int rr, int cc) {
        if (rr < 0 || cc < 0 || rr >= rows || cc >= cols || !valid(rr, cc)) return;
        const long d2 = static_cast<long>(rr - r) * (rr - r) + static_cast<long>(cc - c) * (cc - c);
        const std::size_t idx = static_cast<std::size_t>(rr) * cols + cc;
        if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
          best_d2 = d2;
          best_idx = idx;
        }
      };
      // Chebyshev rings; a ring at radius k cannot hold anything closer than k.
      for (int k = 1; k <= max_radius; ++k) {
        if (static_cast<long>(k) * k > best_d2) break;
        for (int dc = -k; dc <= k; ++dc) {
          consider(r - k, c + dc);
          consider(r + k, c + dc);
        }
        for (int dr = -k + 1; dr <= k - 1; ++dr) {
          consider(r + dr, c - k);
          consider(r + dr, c + k);
        }
      }
      out.raw()[static_cast<std::size_t>(r) * cols + c] = values.raw()[best_idx];
    }
  }
  return out;
}

BinaryGrid Sample::valid_mask() const {
  BinaryGrid m(input[0].rows(), input[0].cols());
  for (std::size_t i = 0; i < m.size(); ++i) m.raw()[i] = input[0].raw()[i] > 0.5f ? 1 : 0;
  return m;
}

Sample make_input(const SceneSpec& scene) {
  const int n = scene.grid_size();
  Sample s;
  s.input[0] = FloatGrid(n, n);
  s.input[1] = FloatGrid(n, n, 0.0f);
  for (std::size_t i = 0; i < s.input[0].size(); ++i)
    s.input[0].raw()[i] = scene.buildings().raw()[i] ? 0.0f : 1.0f;
  for (const auto& tx : scene.transmitters()) s.input[1][tx.position] = 1.0f;
  return s;
}

Sample make_sample(const SceneSpec& scene, const RadioMaps& maps, std::size_t base_id,
                   const EncodingSpec& enc) {
  Sample s = make_input(scene);
  s.base_id = base_id;
  s.target[0] = normalize(fill_missing(maps.rss_dbm, maps.valid_mask), MapChannel::kRss, enc);
  s.target[1] =
      normalize(fill_missing(maps.exposure_dbuv, maps.valid_mask), MapChannel::kExposure, enc);
  return s;
}

Sample flip_sample(const Sample& s, Flip f) {
  auto apply = [f](const FloatGrid& g) {
    switch (f) {
      case Flip::kNone: return g;
      case Flip::kHorizontal: return flip_horizontal(g);
      case Flip::kVertical: return flip_vertical(g);
      case Flip::kBoth: return flip_vertical(flip_horizontal(g));
    }
    return g;
  };
  Sample out;
  for (int k = 0; k < 2; ++k) {
    out.input[k] = apply(s.input[k]);
    out.target[k] = s.target[k].empty() ? s.target[k] : apply(s.target[k]);
  }
  out.base_id = s.base_id;
  out.flip = static_cast<Flip>(static_cast<std::uint8_t>(s.flip) ^ static_cast<std::uint8_t>(f));
  return out;
}

std::vector<Sample> augment(const std::vector<Sample>& samples, bool include_both) {
  std::vector<Sample> out;
  out.reserve(samples.size() * (include_both ? 4 : 3));
  out.insert(out.end(), samples.begin(), samples.end());
  for (const auto& s : samples) out.push_back(flip_sample(s, Flip::kHorizontal));
  for (const auto& s : samples) out.push_back(flip_sample(s, Flip::kVertical));
  if (include_both)
    for (const auto& s : samples) out.push_back(flip_sample(s, Flip::kBoth));
  return out;
}

SplitResult split(const std::vector<Sample>& samples, double val_ratio, std::uint64_t seed) {
  if (!(val_ratio > 0.0 && val_ratio < 1.0)) throw InvalidArgument("val_ratio must be in (0, 1)");
  std::vector<std::size_t> bases;
  for (const auto& s : samples) bases.push_back(s.base_id);
  std::sort(bases.begin(), bases.end());
  bases.erase(std::unique(bases.begin(), bases.end()), bases.end());
  if (bases.size() < 2) throw InvalidArgument("split needs at least 2 base samples");

  std::mt19937_64 rng(seed);
  std::shuffle(bases.begin(), bases.end(), rng);
  const auto b = static_cast<double>(bases.size());
  auto n_train = static_cast<std::size_t>(std::floor(b * (1.0 - val_ratio) + 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, bases.size() - 1);
  std::map<std::size_t, bool> is_train;
  for (std::size_t i = 0; i < bases.size(); ++i) is_train[bases[i]] = i < n_train;

  SplitResult out;
  for (const auto& s : samples) (is_train[s.base_id] ? out.train : out.test).push_back(s);
  return out;
}

namespace {

constexpr std::uint64_t kTxStream = 0xD1B54A32D192ED03ULL;

std::vector<Pixel> draw_transmitters(const SceneSpec& scene, int count, std::uint64_t scene_seed) {
  std::vector<Pixel> outdoor;
  for (int r = 0; r < scene.grid_size(); ++r)
    for (int c = 0; c < scene.grid_size(); ++c)
      if (!scene.buildings()(r, c)) outdoor.push_back({r, c});
  std::mt19937_64 rng(scene_seed ^ kTxStream);
  std::vector<Pixel> picked;
  std::sample(outdoor.begin(), outdoor.end(), std::back_inserter(picked), count, rng);
  // std::sample keeps input order; shuffle so TX order is not row-major biased
  std::shuffle(picked.begin(), picked.end(), rng);
  return picked;
}

SceneGenOptions scene_options(const DatasetOptions& o) {
  SceneGenOptions g;
  g.grid_size = o.grid_size;
  g.side_length_m = o.side_length_m;
  g.size = o.building_size;
  return g;
}

DatasetOptions options_from_json(const nlohmann::json& j) {
  DatasetOptions o;
  o.n_scenes = j.at("n_scenes");
  o.tx_min = j.at("tx_min");
  o.tx_max = j.at("tx_max");
  o.seed = j.at("seed");
  o.grid_size = j.at("grid_size");
  o.side_length_m = j.at("side_length_m");
  o.buildings_min = j.at("buildings_min");
  o.buildings_max = j.at("buildings_max");
  o.building_size = {j.at("building_size").at(0), j.at("building_size").at(1)};
  o.propagation.wall_loss_db = j.at("wall_loss_db");
  o.propagation.rx_gain_dbi = j.at("rx_gain_dbi");
  o.propagation.impedance_ohm = j.at("impedance_ohm");
  const auto& e = j.at("encoding");
  o.encoding = {e.at(0), e.at(1), e.at(2), e.at(3)};
  return o;
}

void write_sample_file(const std::filesystem::path& path, const Sample& s) {
  std::vector<std::uint8_t> bytes;
  for (const auto* g : {&s.input[0], &s.input[1], &s.target[0], &s.target[1]}) {
    auto b = io::float32_bytes(*g);
    bytes.insert(bytes.end(), b.begin(), b.end());
  }
  io::write_bytes(path, bytes);
}

}  // namespace

nlohmann::json options_to_json(const DatasetOptions& o) {
  return {{"n_scenes", o.n_scenes},
          {"tx_min", o.tx_min},
          {"tx_max", o.tx_max},
          {"seed", o.seed},
          {"grid_size", o.grid_size},
          {"side_length_m", o.side_length_m},
          {"buildings_min", o.buildings_min},
          {"buildings_max", o.buildings_max},
          {"building_size", {o.building_size.min_px, o.building_size.max_px}},
          {"wall_loss_db", o.propagation.wall_loss_db},
          {"rx_gain_dbi", o.propagation.rx_gain_dbi},
          {"impedance_ohm", o.propagation.impedance_ohm},
          {"encoding",
           {o.encoding.rss_floor_dbm, o.encoding.rss_ceil_dbm, o.encoding.exp_floor_dbuv,
            o.encoding.exp_ceil_dbuv}}};
}

SceneSpec scene_for_record(const DatasetOptions& opts, const SampleRecord& rec) {
  return generate_scene(rec.scene_seed, rec.n_buildings, scene_options(opts))
      .with_transmitters_at(rec.tx);
}

DatasetManifest generate_dataset(const DatasetOptions& opts, const std::filesystem::path& dir) {
  if (opts.n_scenes < 1) throw InvalidArgument("n_scenes must be >= 1");
  if (opts.tx_min < 1 || opts.tx_max > 8 || opts.tx_min > opts.tx_max)
    throw InvalidArgument("tx count range must lie within [1, 8]");
  if (opts.buildings_min < 0 || opts.buildings_max < opts.buildings_min)
    throw InvalidArgument("invalid building count range");
  opts.encoding.validate();

  DatasetManifest manifest;
  manifest.options = opts;
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<int> n_build(opts.buildings_min, opts.buildings_max);
  std::uniform_int_distribution<int> n_tx(opts.tx_min, opts.tx_max);
  const auto gen = scene_options(opts);
  std::filesystem::create_directories(dir / "samples");

  const long max_attempts = 20L * opts.n_scenes;
  for (long attempt = 0; static_cast<int>(manifest.samples.size()) < opts.n_scenes; ++attempt) {
    if (attempt >= max_attempts) throw InfeasibleScene("too many infeasible scenes");
    const std::uint64_t scene_seed = rng();
    const int nb = n_build(rng);
    const int ntx = n_tx(rng);
    SceneSpec geometry;
    try {
      geometry = generate_scene(scene_seed, nb, gen);
    } catch (const InfeasibleScene&) {
      ++manifest.skipped_infeasible;
      continue;
    }
    SampleRecord rec;
    rec.id = manifest.samples.size();
    rec.scene_seed = scene_seed;
    rec.n_buildings = nb;
    rec.tx = draw_transmitters(geometry, ntx, scene_seed);
    char name[32];
    std::snprintf(name, sizeof name, "base_%05zu.f32", rec.id);
    rec.file = std::string("samples/") + name;

    const auto scene = geometry.with_transmitters_at(rec.tx);
    const auto maps = compute_maps(scene, opts.propagation);
    write_sample_file(dir / rec.file, make_sample(scene, maps, rec.id, opts.encoding));
    manifest.samples.push_back(std::move(rec));
  }

  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : manifest.samples) {
    nlohmann::json tx = nlohmann::json::array();
    for (auto p : r.tx) tx.push_back({p.row, p.col});
    recs.push_back({{"id", r.id},
                    {"scene_seed", r.scene_seed},
                    {"n_buildings", r.n_buildings},
                    {"tx", tx},
                    {"file", r.file}});
  }
  nlohmann::json j = {{"format", "emfplan-dataset-v1"},
                      {"channels", {"outdoor", "tx", "rss_norm", "exposure_norm"}},
                      {"dtype", "float32"},
                      {"shape", {4, opts.grid_size, opts.grid_size}},
                      {"options", options_to_json(opts)},
                      {"skipped_infeasible", manifest.skipped_infeasible},
                      {"samples", recs}};
  io::write_text(dir / "manifest.json", j.dump(1));
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& dir) {
  const auto j = nlohmann::json::parse(io::read_text(dir / "manifest.json"));
  DatasetManifest m;
  m.options = options_from_json(j.at("options"));
  m.skipped_infeasible = j.value("skipped_infeasible", 0);
  for (const auto& r : j.at("samples")) {
    SampleRecord rec;
    rec.id = r.at("id");
    rec.scene_seed = r.at("scene_seed");
    rec.n_buildings = r.at("n_buildings");
    for (const auto& p : r.at("tx")) rec.tx.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    rec.file = r.at("file");
    m.samples.push_back(std::move(rec));
  }
  return m;
}

std::vector<Sample> load_samples(const std::filesystem::path& dir, const DatasetManifest& manifest) {
  const int n = manifest.options.grid_size;
  const std::size_t plane = static_cast<std::size_t>(n) * n * sizeof(float);
  std::vector<Sample> out;
  out.reserve(manifest.samples.size());
  for (const auto& rec : manifest.samples) {
    const auto bytes = io::read_bytes(dir / rec.file);
    if (bytes.size() != 4 * plane) throw IoError("sample file " + rec.file + " has wrong size");
    std::span<const std::uint8_t> all(bytes);
    Sample s;
    s.input[0] = io::float32_grid(all.subspan(0, plane), n, n);
    s.input[1] = io::float32_grid(all.subspan(plane, plane), n, n);
    s.target[0] = io::float32_grid(all.subspan(2 * plane, plane), n, n);
    s.target[1] = io::float32_grid(all.subspan(3 * plane, plane), n, n);
    s.base_id = rec.id;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace emfplan
