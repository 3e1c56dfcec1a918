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

#include "emfplan/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "emfplan/io.hpp"

namespace emfplan {

void PropagationParams::validate() const {
  if (!(wall_loss_db >= 0.0)) throw InvalidArgument("wall_loss_db must be >= 0");
  if (d_min_m && !(*d_min_m > 0.0)) throw InvalidArgument("d_min_m must be > 0");
  if (!(impedance_ohm > 0.0)) throw InvalidArgument("impedance_ohm must be > 0");
}

double fspl_db(double distance_m, double frequency_hz) {
  return 20.0 * std::log10(4.0 * kPi * distance_m * frequency_hz / kSpeedOfLight);
}

double field_to_dbuv(double e_v_per_m) { return 20.0 * std::log10(e_v_per_m / 1e-6); }

namespace {

// floor division for possibly negative numerators, positive denominator
long floor_div(long n, long d) {
  long q = n / d;
  if ((n % d != 0) && (n < 0)) --q;
  return q;
}

}  // namespace

int wall_crossings(Pixel a, Pixel b, const BinaryGrid& buildings) {
  if (!buildings.contains(a) || !buildings.contains(b)) throw BoundsError("wall_crossings endpoint");
  const long dr = b.row - a.row;
  const long dc = b.col - a.col;
  const long steps = std::max(std::labs(dr), std::labs(dc));
  if (steps == 0) return 0;

  // Sample k in [0, steps]; the minor coordinate is rounded to the nearest
  // cell, and an exact half-way sample covers both neighbours (OR) so the
  // traversal is identical under reversal and mirroring.
  auto cell_blocked = [&](long k) {
    auto coord = [&](long start, long delta, long* lo, long* hi) {
      const long num = start * steps + k * delta;
      const long fl = floor_div(num, steps);
      const long rem = num - fl * steps;
      if (2 * rem == steps) {
        *lo = fl;
        *hi = fl + 1;
      } else {
        *lo = *hi = fl + (2 * rem > steps ? 1 : 0);
      }
    };
    long r0, r1, c0, c1;
    coord(a.row, dr, &r0, &r1);
    coord(a.col, dc, &c0, &c1);
    for (long r = r0; r <= r1; ++r)
      for (long c = c0; c <= c1; ++c)
        if (buildings(static_cast<int>(r), static_cast<int>(c))) return true;
    return false;
  };

  int runs = 0;
  bool inside = false;
  for (long k = 0; k <= steps; ++k) {
    const bool blocked = cell_blocked(k);
    if (blocked && !inside) ++runs;
    inside = blocked;
  }
  return runs;
}

namespace {

double pixel_distance_m(Pixel a, Pixel b, double res) {
  const double dr = static_cast<double>(a.row - b.row);
  const double dc = static_cast<double>(a.col - b.col);
  return res * std::sqrt(dr * dr + dc * dc);
}

}  // namespace

double path_gain_db(const TxDescriptor& tx, Pixel p, const SceneSpec& scene,
                    const PropagationParams& params) {
  if (!scene.contains(p)) throw BoundsError("path_gain_db receiver outside the grid");
  const double d =
      std::max(pixel_distance_m(tx.position, p, scene.resolution_m()), params.effective_d_min(scene));
  const int walls = wall_crossings(tx.position, p, scene.buildings());
  return -(fspl_db(d, tx.frequency_hz) + walls * params.wall_loss_db);
}

TxField compute_tx_field(const SceneSpec& scene, const TxDescriptor& tx,
                         const PropagationParams& params) {
  params.validate();
  const int n = scene.grid_size();
  const double res = scene.resolution_m();
  const double d_min = params.effective_d_min(scene);
  const double eirp_w = std::pow(10.0, (tx.power_dbm - 30.0) / 10.0);
  TxField f{tx.position, DoubleGrid(n, n), DoubleGrid(n, n)};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const Pixel p{r, c};
      const double d = std::max(pixel_distance_m(tx.position, p, res), d_min);
      const int walls = wall_crossings(tx.position, p, scene.buildings());
      const double wall_db = walls * params.wall_loss_db;
      f.rx_power_dbm(r, c) =
          tx.power_dbm + params.rx_gain_dbi - (fspl_db(d, tx.frequency_hz) + wall_db);
      f.power_density_wm2(r, c) =
          eirp_w / (4.0 * kPi * d * d) * std::pow(10.0, -wall_db / 10.0);
    }
  }
  return f;
}

RadioMaps combine_fields(const SceneSpec& scene, std::span<const TxField* const> fields,
                         const PropagationParams& params) {
  const int n = scene.grid_size();
  RadioMaps m{DoubleGrid(n, n, params.rss_floor_dbm), DoubleGrid(n, n, params.exposure_floor_dbuv),
              scene.outdoor_mask()};
  if (fields.empty()) return m;
  for (std::size_t i = 0; i < m.rss_dbm.size(); ++i) {
    double best = params.rss_floor_dbm;
    double density = 0.0;
    for (const TxField* f : fields) {
      best = std::max(best, f->rx_power_dbm.raw()[i]);
      density += f->power_density_wm2.raw()[i];
    }
    m.rss_dbm.raw()[i] = best;
    if (density > 0.0) {
      const double e = std::sqrt(params.impedance_ohm * density);
      m.exposure_dbuv.raw()[i] = std::max(params.exposure_floor_dbuv, field_to_dbuv(e));
    }
  }
  return m;
}

RadioMaps compute_maps(const SceneSpec& scene, const PropagationParams& params) {
  std::vector<TxField> fields;
  fields.reserve(scene.transmitters().size());
  for (const auto& tx : scene.transmitters()) fields.push_back(compute_tx_field(scene, tx, params));
  std::vector<const TxField*> ptrs;
  for (const auto& f : fields) ptrs.push_back(&f);
  return combine_fields(scene, ptrs, params);
}

void save_maps(const RadioMaps& maps, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_float_grid(dir / "rss_dbm.f32", grid_cast<float>(maps.rss_dbm), "dBm");
  io::write_float_grid(dir / "exposure_dbuv.f32", grid_cast<float>(maps.exposure_dbuv), "dBuV/m");
  io::write_float_grid(dir / "valid_mask.f32", grid_cast<float>(maps.valid_mask), "binary");
}

RadioMaps load_maps(const std::filesystem::path& dir) {
  RadioMaps m;
  m.rss_dbm = grid_cast<double>(io::read_float_grid(dir / "rss_dbm.f32"));
  m.exposure_dbuv = grid_cast<double>(io::read_float_grid(dir / "exposure_dbuv.f32"));
  m.valid_mask = grid_cast<std::uint8_t>(io::read_float_grid(dir / "valid_mask.f32"));
  return m;
}

}  // namespace emfplan
