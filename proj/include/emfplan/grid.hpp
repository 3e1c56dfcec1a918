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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "emfplan/error.hpp"

namespace emfplan {

/// Integer pixel coordinate. `row` indexes the first grid axis, `col` the
/// second; row-major order is the canonical ordering everywhere.
struct Pixel {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Pixel&, const Pixel&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Pixel& p) {
    return os << '(' << p.row << ", " << p.col << ')';
  }
};

/// Dense row-major 2D grid with value semantics.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw InvalidArgument("negative grid extent");
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(Pixel p) const noexcept {
    return p.row >= 0 && p.col >= 0 && p.row < rows_ && p.col < cols_;
  }
  std::size_t index(Pixel p) const noexcept {
    return static_cast<std::size_t>(p.row) * cols_ + p.col;
  }

  T& operator()(int r, int c) noexcept { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const noexcept {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  T& operator[](Pixel p) noexcept { return data_[index(p)]; }
  const T& operator[](Pixel p) const noexcept { return data_[index(p)]; }

  T& at(Pixel p) {
    if (!contains(p)) {
      throw BoundsError("pixel (" + std::to_string(p.row) + "," + std::to_string(p.col) +
                        ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                        " grid");
    }
    return (*this)[p];
  }
  const T& at(Pixel p) const { return const_cast<Grid&>(*this).at(p); }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& raw() noexcept { return data_; }
  const std::vector<T>& raw() const noexcept { return data_; }

  bool same_shape(const auto& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using BinaryGrid = Grid<std::uint8_t>;
using FloatGrid = Grid<float>;
using DoubleGrid = Grid<double>;

/// Mirror across the vertical axis (columns reversed).
template <typename T>
Grid<T> flip_horizontal(const Grid<T>& g) {
  Grid<T> out(g.rows(), g.cols());
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) out(r, g.cols() - 1 - c) = g(r, c);
  return out;
}

/// Mirror across the horizontal axis (rows reversed).
template <typename T>
Grid<T> flip_vertical(const Grid<T>& g) {
  Grid<T> out(g.rows(), g.cols());
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) out(g.rows() - 1 - r, c) = g(r, c);
  return out;
}

template <typename To, typename From>
Grid<To> grid_cast(const Grid<From>& g) {
  Grid<To> out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) out.raw()[i] = static_cast<To>(g.raw()[i]);
  return out;
}

}  // namespace emfplan
