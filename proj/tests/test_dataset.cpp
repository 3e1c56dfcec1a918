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

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <limits>
#include <random>
#include <set>

#include "emfplan/dataset.hpp"
#include "emfplan/io.hpp"

using namespace emfplan;
using Catch::Matchers::WithinAbs;

namespace {

// Brute-force nearest valid neighbour over every pixel.
DoubleGrid nearest_fill_oracle(const DoubleGrid& v, const BinaryGrid& valid) {
  DoubleGrid out = v;
  for (int r = 0; r < v.rows(); ++r)
    for (int c = 0; c < v.cols(); ++c) {
      if (valid(r, c)) continue;
      long best = std::numeric_limits<long>::max();
      double val = 0;
      for (int rr = 0; rr < v.rows(); ++rr)
        for (int cc = 0; cc < v.cols(); ++cc) {
          if (!valid(rr, cc)) continue;
          const long d = (rr - r) * (rr - r) + (cc - c) * (cc - c);
          if (d < best) {  // strict: first in row-major order wins ties
            best = d;
            val = v(rr, cc);
          }
        }
      out(r, c) = val;
    }
  return out;
}

Sample tiny_sample(std::size_t id, float seed_value) {
  Sample s;
  for (int k = 0; k < 2; ++k) {
    s.input[k] = FloatGrid(4, 4);
    s.target[k] = FloatGrid(4, 4);
    for (std::size_t i = 0; i < 16; ++i) {
      s.input[k].raw()[i] = static_cast<float>((i + k) % 2);
      s.target[k].raw()[i] = seed_value + 0.01f * static_cast<float>(i + 16 * k);
    }
  }
  s.base_id = id;
  return s;
}

}  // namespace

TEST_CASE("normalization reference values") {
  REQUIRE_THAT(normalize(-63.2, MapChannel::kRss), WithinAbs(1.0, 1e-12));
  // 4.77e-10 W expressed in dBm is the ceiling
  REQUIRE_THAT(10.0 * std::log10(4.77e-10 / 1e-3), WithinAbs(-63.2, 0.05));
  REQUIRE(normalize(-150.0, MapChannel::kRss) == -1.0);
  REQUIRE(normalize(-400.0, MapChannel::kRss) == -1.0);
  REQUIRE(normalize(-std::numeric_limits<double>::infinity(), MapChannel::kRss) == -1.0);
  REQUIRE_THAT(normalize(-106.6, MapChannel::kRss), WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(normalize(60.0, MapChannel::kExposure), WithinAbs(0.0, 1e-12));
}

TEST_CASE("normalization round trip and clipping idempotence") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-150.0, -63.2);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    REQUIRE_THAT(denormalize(normalize(v, MapChannel::kRss), MapChannel::kRss), WithinAbs(v, 1e-6));
    const double once = normalize(v - 100.0, MapChannel::kRss);
    REQUIRE(normalize(denormalize(once, MapChannel::kRss), MapChannel::kRss) == once);
  }
}

TEST_CASE("fill_missing cases") {
  DoubleGrid v(3, 3);
  for (std::size_t i = 0; i < 9; ++i) v.raw()[i] = static_cast<double>(i);
  REQUIRE(fill_missing(v, BinaryGrid(3, 3, 1)) == v);

  BinaryGrid one(3, 3, 0);
  one(1, 2) = 1;
  const auto constant = fill_missing(v, one);
  for (auto x : constant.values()) REQUIRE(x == v(1, 2));

  DoubleGrid row(1, 4, 0.0);
  row(0, 0) = 10.0;
  row(0, 3) = 30.0;
  BinaryGrid seeds(1, 4, 0);
  seeds(0, 0) = seeds(0, 3) = 1;
  const auto filled = fill_missing(row, seeds);
  REQUIRE(filled(0, 1) == 10.0);
  REQUIRE(filled(0, 2) == 30.0);

  REQUIRE_THROWS_AS(fill_missing(v, BinaryGrid(3, 3, 0)), InvalidArgument);
}

TEST_CASE("fill_missing matches a brute-force nearest neighbour") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 5 + trial % 7, c = 4 + trial % 9;
    DoubleGrid v(r, c);
    BinaryGrid valid(r, c, 0);
    std::bernoulli_distribution keep(trial % 2 ? 0.1 : 0.6);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v.raw()[i] = static_cast<double>(rng() % 1000);
      valid.raw()[i] = keep(rng);
    }
    valid.raw()[rng() % valid.size()] = 1;
    REQUIRE(fill_missing(v, valid) == nearest_fill_oracle(v, valid));
  }
}

TEST_CASE("augmentation triples the set and flips are involutions") {
  std::vector<Sample> base;
  for (std::size_t i = 0; i < 100; ++i) base.push_back(tiny_sample(i, static_cast<float>(i)));
  const auto aug = augment(base);
  REQUIRE(aug.size() == 300);
  REQUIRE(augment(base, true).size() == 400);
  const auto twice = flip_sample(flip_sample(base[3], Flip::kHorizontal), Flip::kHorizontal);
  REQUIRE(twice.input == base[3].input);
  REQUIRE(twice.target == base[3].target);
  REQUIRE(twice.flip == Flip::kNone);
  // inputs and targets move together
  const auto h = aug[100 + 7];
  REQUIRE(h.base_id == 7);
  REQUIRE(h.input[0] == flip_horizontal(base[7].input[0]));
  REQUIRE(h.target[1] == flip_horizontal(base[7].target[1]));
}

TEST_CASE("mirror-symmetric scene is a fixed point of the flip") {
  // Two-pixel walls: no same-row distance ties, so the row-major tie rule of
  // the fill cannot break the mirror symmetry.
  BinaryGrid b(16, 16, 0);
  for (int r = 4; r < 12; ++r) b(r, 2) = b(r, 3) = b(r, 12) = b(r, 13) = 1;
  const SceneSpec scene(160.0, 16, b, {{{0, 7}}, {{0, 8}}});
  const auto s = make_sample(scene, compute_maps(scene), 0);
  const auto f = flip_sample(s, Flip::kHorizontal);
  REQUIRE(f.input == s.input);
  REQUIRE(f.target == s.target);
}

TEST_CASE("split sizes, determinism and no leakage") {
  std::vector<Sample> base;
  for (std::size_t i = 0; i < 5000; ++i) {
    Sample s;
    s.base_id = i;
    base.push_back(s);
  }
  const auto sp = split(base, 0.1, 42);
  REQUIRE(sp.train.size() == 4500);
  REQUIRE(sp.test.size() == 500);

  std::vector<Sample> two(2);
  two[1].base_id = 1;
  const auto half = split(two, 0.5, 1);
  REQUIRE(half.train.size() == 1);
  REQUIRE(half.test.size() == 1);
  REQUIRE_THROWS_AS(split(std::vector<Sample>(3), 0.5, 1), InvalidArgument);
  REQUIRE_THROWS_AS(split(two, 1.0, 1), InvalidArgument);

  std::vector<Sample> small;
  for (std::size_t i = 0; i < 40; ++i) small.push_back(tiny_sample(i, 0.0f));
  const auto aug = augment(small);
  const auto a = split(aug, 0.25, 7);
  const auto b = split(aug, 0.25, 7);
  REQUIRE(a.train.size() == 90);
  std::set<std::size_t> train_ids, test_ids;
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    REQUIRE(a.train[i].base_id == b.train[i].base_id);
    train_ids.insert(a.train[i].base_id);
  }
  for (const auto& s : a.test) test_ids.insert(s.base_id);
  for (auto id : test_ids) REQUIRE_FALSE(train_ids.contains(id));
}

TEST_CASE("dataset generation is reproducible and respects the TX range") {
  const auto tmp = std::filesystem::temp_directory_path();
  DatasetOptions opts;
  opts.n_scenes = 10;
  opts.seed = 3;
  opts.grid_size = 32;
  opts.building_size = {2, 6};
  const auto m1 = generate_dataset(opts, tmp / "emfplan_ds_a");
  const auto m2 = generate_dataset(opts, tmp / "emfplan_ds_b");
  REQUIRE(io::read_text(tmp / "emfplan_ds_a/manifest.json") ==
          io::read_text(tmp / "emfplan_ds_b/manifest.json"));
  REQUIRE(m1.samples.size() == 10);

  opts.tx_min = 1;
  opts.tx_max = 3;
  const auto m3 = generate_dataset(opts, tmp / "emfplan_ds_c");
  const auto samples = load_samples(tmp / "emfplan_ds_c", load_manifest(tmp / "emfplan_ds_c"));
  REQUIRE(samples.size() == 10);
  for (const auto& s : samples) {
    int count = 0;
    for (auto v : s.input[1].values()) {
      REQUIRE((v == 0.0f || v == 1.0f));
      count += v > 0.5f;
    }
    REQUIRE(count >= 1);
    REQUIRE(count <= 3);
    for (int k = 0; k < 2; ++k)
      for (auto v : s.target[k].values()) {
        REQUIRE(v >= -1.0f);
        REQUIRE(v <= 1.0f);
      }
  }
  // records regenerate their scene exactly
  const auto& rec = m3.samples[4];
  const auto scene = scene_for_record(m3.options, rec);
  const auto again = make_sample(scene, compute_maps(scene, m3.options.propagation), rec.id);
  REQUIRE(again.target == samples[4].target);
  REQUIRE_THROWS_AS(generate_dataset({.n_scenes = 1, .tx_min = 1, .tx_max = 9}, tmp / "x"),
                    InvalidArgument);
}
