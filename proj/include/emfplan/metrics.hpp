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

#include "emfplan/grid.hpp"

namespace emfplan {

/// 6 V/m expressed in dBuV/m; the coverage-planning exposure threshold must
/// stay below it.
inline constexpr double kRegulatoryLimitDbuv = 135.56302500767287;

struct Thresholds {
  double phi_dbm = -110.0;    // coverage: rss >= phi
  double gamma_dbuv = 70.0;   // compliance: exposure <= gamma
  double lambda_er = 0.90;    // reward gate on the exposure rate

  void validate() const;
};

/// Pooled error statistics in the units of the inputs (dB here).
struct ErrorStats {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

/// RMSE / MAE over pixels where `mask` is nonzero (all pixels when the mask
/// is empty).
double rmse(const DoubleGrid& ref, const DoubleGrid& pred, const BinaryGrid& mask = {});
double mae(const DoubleGrid& ref, const DoubleGrid& pred, const BinaryGrid& mask = {});

/// Accumulates absolute and squared errors across many maps.
class ErrorAccumulator {
 public:
  void add(const DoubleGrid& ref, const DoubleGrid& pred, const BinaryGrid& mask = {});
  ErrorStats stats() const;

 private:
  double abs_sum_ = 0.0;
  double sq_sum_ = 0.0;
  std::size_t count_ = 0;
};

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean SSIM over all fully-contained Gaussian windows. Images smaller than
/// the window use a single window spanning the smaller extent.
double ssim(const DoubleGrid& x, const DoubleGrid& y, double dynamic_range,
            const SsimOptions& opts = {});

BinaryGrid coverage_indicator(const DoubleGrid& rss_dbm, double phi_dbm);
BinaryGrid compliance_indicator(const DoubleGrid& exposure_dbuv, double gamma_dbuv);

/// Fraction of masked pixels with rss >= phi.
double coverage_rate(const DoubleGrid& rss_dbm, const BinaryGrid& mask, double phi_dbm);
/// Fraction of masked pixels with exposure <= gamma.
double exposure_rate(const DoubleGrid& exposure_dbuv, const BinaryGrid& mask, double gamma_dbuv);

}  // namespace emfplan
