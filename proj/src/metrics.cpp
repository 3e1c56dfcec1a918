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

#include "emfplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace emfplan {

void Thresholds::validate() const {
  if (!(lambda_er > 0.0 && lambda_er <= 1.0)) throw InvalidArgument("lambda_er must be in (0, 1]");
  if (!(gamma_dbuv < kRegulatoryLimitDbuv))
    throw InvalidArgument("exposure threshold must stay below the 6 V/m limit (135.6 dBuV/m)");
  if (std::isnan(phi_dbm)) throw InvalidArgument("phi_dbm is NaN");
}

namespace {

void check_shapes(const DoubleGrid& a, const DoubleGrid& b, const BinaryGrid& mask) {
  if (!a.same_shape(b)) throw ShapeMismatch("reference and prediction shapes differ");
  if (!mask.empty() && !mask.same_shape(a)) throw ShapeMismatch("mask shape differs");
}

}  // namespace

void ErrorAccumulator::add(const DoubleGrid& ref, const DoubleGrid& pred, const BinaryGrid& mask) {
  check_shapes(ref, pred, mask);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (!mask.empty() && !mask.raw()[i]) continue;
    const double e = ref.raw()[i] - pred.raw()[i];
    abs_sum_ += std::abs(e);
    sq_sum_ += e * e;
    ++count_;
  }
}

ErrorStats ErrorAccumulator::stats() const {
  if (count_ == 0) throw InvalidArgument("no pixels to evaluate");
  return {abs_sum_ / count_, std::sqrt(sq_sum_ / count_), count_};
}

double rmse(const DoubleGrid& ref, const DoubleGrid& pred, const BinaryGrid& mask) {
  ErrorAccumulator acc;
  acc.add(ref, pred, mask);
  return acc.stats().rmse;
}

double mae(const DoubleGrid& ref, const DoubleGrid& pred, const BinaryGrid& mask) {
  ErrorAccumulator acc;
  acc.add(ref, pred, mask);
  return acc.stats().mae;
}

double ssim(const DoubleGrid& x, const DoubleGrid& y, double dynamic_range,
            const SsimOptions& opts) {
  if (!x.same_shape(y)) throw ShapeMismatch("ssim inputs differ in shape");
  if (!(dynamic_range > 0.0)) throw InvalidArgument("ssim dynamic range must be > 0");
  if (x.empty()) throw InvalidArgument("ssim of empty images");

  const int wr = std::min({opts.window, x.rows()});
  const int wc = std::min({opts.window, x.cols()});
  // Separable Gaussian centred in the window, normalized to unit mass.
  auto kernel = [&](int w) {
    std::vector<double> k(w);
    const double centre = (w - 1) / 2.0;
    double s = 0.0;
    for (int i = 0; i < w; ++i) {
      k[i] = std::exp(-(i - centre) * (i - centre) / (2.0 * opts.sigma * opts.sigma));
      s += k[i];
    }
    for (auto& v : k) v /= s;
    return k;
  };
  const auto kr = kernel(wr);
  const auto kc = kernel(wc);
  const double c1 = (opts.k1 * dynamic_range) * (opts.k1 * dynamic_range);
  const double c2 = (opts.k2 * dynamic_range) * (opts.k2 * dynamic_range);

  double total = 0.0;
  long windows = 0;
  for (int r0 = 0; r0 + wr <= x.rows(); ++r0) {
    for (int c0 = 0; c0 + wc <= x.cols(); ++c0) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int i = 0; i < wr; ++i) {
        for (int j = 0; j < wc; ++j) {
          const double w = kr[i] * kc[j];
          const double a = x(r0 + i, c0 + j);
          const double b = y(r0 + i, c0 + j);
          mx += w * a;
          my += w * b;
          mxx += w * a * a;
          myy += w * b * b;
          mxy += w * a * b;
        }
      }
      const double vx = mxx - mx * mx;
      const double vy = myy - my * my;
      const double cxy = mxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

BinaryGrid coverage_indicator(const DoubleGrid& rss_dbm, double phi_dbm) {
  BinaryGrid out(rss_dbm.rows(), rss_dbm.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] = rss_dbm.raw()[i] >= phi_dbm ? 1 : 0;
  return out;
}

BinaryGrid compliance_indicator(const DoubleGrid& exposure_dbuv, double gamma_dbuv) {
  BinaryGrid out(exposure_dbuv.rows(), exposure_dbuv.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.raw()[i] = exposure_dbuv.raw()[i] <= gamma_dbuv ? 1 : 0;
  return out;
}

namespace {

double masked_rate(const BinaryGrid& indicator, const BinaryGrid& mask) {
  if (!indicator.same_shape(mask)) throw ShapeMismatch("rate mask shape differs");
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.raw()[i]) continue;
    ++total;
    hits += indicator.raw()[i];
  }
  if (total == 0) throw InvalidArgument("rate over an empty mask");
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

double coverage_rate(const DoubleGrid& rss_dbm, const BinaryGrid& mask, double phi_dbm) {
  return masked_rate(coverage_indicator(rss_dbm, phi_dbm), mask);
}

double exposure_rate(const DoubleGrid& exposure_dbuv, const BinaryGrid& mask, double gamma_dbuv) {
  return masked_rate(compliance_indicator(exposure_dbuv, gamma_dbuv), mask);
}

}  // namespace emfplan
