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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emfplan/metrics.hpp"
#include "emfplan/propagation.hpp"
#include "emfplan/scene.hpp"

namespace emfplan {

/// One heatmap in a panel row. Building pixels are drawn gray.
struct MapPanel {
  std::string title;
  DoubleGrid values;
  std::string units;  // colorbar label, e.g. "dBm"
  double lo = 0.0;
  double hi = 1.0;
  BinaryGrid buildings;
  std::vector<Pixel> tx;
  bool binary = false;  // two-color mask instead of a colormap
};

/// Piecewise-linear viridis approximation, t clamped to [0, 1].
std::array<std::uint8_t, 3> colormap(double t);

std::string map_panels_svg(const std::vector<MapPanel>& panels, int cell_px = 4);

/// Episode returns with a moving average; x axis is the episode number.
std::string learning_curve_svg(const std::vector<double>& returns, const std::string& title, int window = 0);

struct PlotInputs {
  std::vector<double> returns;  // empty = no learning curve
  std::optional<SceneSpec> scene;
  std::optional<RadioMaps> reference;
  std::optional<RadioMaps> predicted;
  Thresholds thresholds;
};

/// Writes learning_curve.svg, maps_rss.svg, maps_exposure.svg and
/// coverage_mask.svg (whichever the inputs allow) and returns their paths.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir, const PlotInputs& in);

}  // namespace emfplan
