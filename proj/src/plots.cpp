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

#include "emfplan/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "emfplan/io.hpp"

namespace emfplan {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

std::string heatmap_png(const MapPanel& p) {
  const int rows = p.values.rows(), cols = p.values.cols();
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(rows) * cols * 3);
  const double span = p.hi > p.lo ? p.hi - p.lo : 1.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      std::array<std::uint8_t, 3> px;
      if (!p.buildings.empty() && p.buildings(r, c)) {
        px = {128, 128, 128};
      } else if (p.binary) {
        px = p.values(r, c) > 0.5 ? std::array<std::uint8_t, 3>{253, 231, 37}
                                  : std::array<std::uint8_t, 3>{68, 1, 84};
      } else {
        px = colormap((p.values(r, c) - p.lo) / span);
      }
      std::copy(px.begin(), px.end(), rgb.begin() + (static_cast<std::size_t>(r) * cols + c) * 3);
    }
  return io::base64_encode(io::encode_png_rgb(cols, rows, rgb));
}

}  // namespace

std::array<std::uint8_t, 3> colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 5> kStops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0) * (kStops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), kStops.size() - 2);
  const double f = t - static_cast<double>(i);
  std::array<std::uint8_t, 3> out{};
  for (int k = 0; k < 3; ++k)
    out[k] = static_cast<std::uint8_t>(std::lround(kStops[i][k] + f * (kStops[i + 1][k] - kStops[i][k])));
  return out;
}

std::string map_panels_svg(const std::vector<MapPanel>& panels, int cell_px) {
  if (panels.empty()) throw InvalidArgument("no panels to draw");
  const int margin = 30, bar_w = 14, bar_gap = 8, label_w = 70;
  std::vector<int> widths;
  int total_w = margin, max_h = 0;
  for (const auto& p : panels) {
    const int w = p.values.cols() * cell_px;
    widths.push_back(w);
    total_w += w + (p.binary ? margin : bar_gap + bar_w + label_w);
    max_h = std::max(max_h, p.values.rows() * cell_px);
  }
  const int total_h = max_h + 2 * margin + 10;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w << "\" height=\"" << total_h
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  int x = margin;
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const auto& p = panels[k];
    const int w = widths[k], h = p.values.rows() * cell_px;
    os << "<text x=\"" << x << "\" y=\"" << margin - 8 << "\">" << escape(p.title) << "</text>\n";
    os << "<image x=\"" << x << "\" y=\"" << margin << "\" width=\"" << w << "\" height=\"" << h
       << "\" style=\"image-rendering:pixelated\" href=\"data:image/png;base64," << heatmap_png(p) << "\"/>\n";
    for (const auto& t : p.tx) {
      const double cx = x + (t.col + 0.5) * cell_px, cy = margin + (t.row + 0.5) * cell_px;
      os << "<circle class=\"tx\" cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << std::max(3, cell_px)
         << "\" fill=\"red\" stroke=\"white\" stroke-width=\"1\"/>\n";
    }
    if (p.binary) {
      x += w + margin;
      continue;
    }
    const int bx = x + w + bar_gap;
    const int steps = 64;
    for (int s = 0; s < steps; ++s) {
      const auto c = colormap(1.0 - (s + 0.5) / steps);
      os << "<rect x=\"" << bx << "\" y=\"" << margin + s * h / static_cast<double>(steps) << "\" width=\"" << bar_w
         << "\" height=\"" << h / static_cast<double>(steps) + 0.5 << "\" fill=\"rgb(" << int(c[0]) << ','
         << int(c[1]) << ',' << int(c[2]) << ")\"/>\n";
    }
    os << "<text x=\"" << bx + bar_w + 3 << "\" y=\"" << margin + 10 << "\">" << num(p.hi) << "</text>\n";
    os << "<text x=\"" << bx + bar_w + 3 << "\" y=\"" << margin + h << "\">" << num(p.lo) << "</text>\n";
    os << "<text class=\"units\" x=\"" << bx << "\" y=\"" << margin + h + 16 << "\">" << escape(p.units)
       << "</text>\n";
    x += w + bar_gap + bar_w + label_w;
  }
  os << "</svg>\n";
  return os.str();
}

std::string learning_curve_svg(const std::vector<double>& returns, const std::string& title, int window) {
  if (returns.empty()) throw InvalidArgument("empty learning curve");
  const int n = static_cast<int>(returns.size());
  if (window <= 0) window = std::max(1, n / 20);
  std::vector<double> avg(n);
  double run = 0.0;
  for (int i = 0; i < n; ++i) {
    run += returns[i];
    if (i >= window) run -= returns[i - window];
    avg[i] = run / std::min(i + 1, window);
  }
  double lo = *std::min_element(returns.begin(), returns.end());
  double hi = *std::max_element(returns.begin(), returns.end());
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double W = 640, H = 360, ml = 60, mr = 20, mt = 30, mb = 45;
  auto px = [&](int ep) { return ml + (n > 1 ? (ep - 1.0) / (n - 1.0) : 0.5) * (W - ml - mr); };
  auto py = [&](double v) { return mt + (1.0 - (v - lo) / (hi - lo)) * (H - mt - mb); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << ml << "\" y=\"18\">" << escape(title) << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
     << "\" stroke=\"black\"/>\n<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
     << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const int ep = 1 + static_cast<int>(std::lround(k * (n - 1) / 4.0));
    const double v = lo + k * (hi - lo) / 4.0;
    os << "<text x=\"" << px(ep) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">" << ep << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  os << "<text class=\"xlabel\" x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 8
     << "\" text-anchor=\"middle\">episode</text>\n";
  os << "<text class=\"ylabel\" transform=\"rotate(-90)\" x=\"" << -(mt + H - mb) / 2 << "\" y=\"16\" "
     << "text-anchor=\"middle\">return</text>\n";
  auto polyline = [&](const std::vector<double>& v, const char* stroke, const char* cls) {
    os << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << stroke << "\" points=\"";
    for (int i = 0; i < n; ++i) os << num(px(i + 1)) << ',' << num(py(v[i])) << ' ';
    os << "\"/>\n";
  };
  polyline(returns, "#9ecae1", "raw");
  polyline(avg, "#08519c", "mean");
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir, const PlotInputs& in) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  auto write = [&](const std::string& name, const std::string& svg) {
    out.push_back(dir / name);
    io::write_text(out.back(), svg);
  };
  if (!in.returns.empty()) write("learning_curve.svg", learning_curve_svg(in.returns, "DQN training return"));
  if (!in.scene || !in.reference) return out;
  const auto& scene = *in.scene;
  std::vector<Pixel> tx;
  for (const auto& t : scene.transmitters()) tx.push_back(t.position);

  auto row_for = [&](bool rss) {
    auto pick = [&](const RadioMaps& m) { return rss ? m.rss_dbm : m.exposure_dbuv; };
    const auto& ref = pick(*in.reference);
    double lo = 1e300, hi = -1e300;
    for (int r = 0; r < ref.rows(); ++r)
      for (int c = 0; c < ref.cols(); ++c)
        if (!scene.buildings()(r, c)) {
          lo = std::min(lo, ref(r, c));
          hi = std::max(hi, ref(r, c));
        }
    const std::string units = rss ? "RSS [dBm]" : "exposure [dBuV/m]";
    std::vector<MapPanel> panels;
    panels.push_back({"reference " + std::string(rss ? "RSS" : "exposure"), ref, units, lo, hi,
                      scene.buildings(), tx, false});
    if (in.predicted)
      panels.push_back({"predicted " + std::string(rss ? "RSS" : "exposure"), pick(*in.predicted), units, lo, hi,
                        scene.buildings(), tx, false});
    return map_panels_svg(panels);
  };
  write("maps_rss.svg", row_for(true));
  write("maps_exposure.svg", row_for(false));

  auto mask_panel = [&](const RadioMaps& m, const std::string& title) {
    const auto cov = coverage_indicator(m.rss_dbm, in.thresholds.phi_dbm);
    DoubleGrid v(cov.rows(), cov.cols());
    for (int r = 0; r < v.rows(); ++r)
      for (int c = 0; c < v.cols(); ++c) v(r, c) = cov(r, c);
    return MapPanel{title, v, "", 0.0, 1.0, scene.buildings(), tx, true};
  };
  std::vector<MapPanel> masks{mask_panel(*in.reference, "coverage (reference)")};
  if (in.predicted) masks.push_back(mask_panel(*in.predicted, "coverage (predicted)"));
  write("coverage_mask.svg", map_panels_svg(masks));
  return out;
}

}  // namespace emfplan
