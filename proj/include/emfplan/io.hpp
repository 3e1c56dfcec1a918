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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "emfplan/grid.hpp"

namespace emfplan::io {

// 8-bit grayscale PNG. Values are stored verbatim.
std::vector<std::uint8_t> encode_png_gray(const Grid<std::uint8_t>& img);
Grid<std::uint8_t> decode_png_gray(std::span<const std::uint8_t> bytes);

/// Interleaved RGB8 PNG, `rgb.size() == 3 * width * height`.
std::vector<std::uint8_t> encode_png_rgb(int width, int height,
                                         std::span<const std::uint8_t> rgb);

void write_png_gray(const std::filesystem::path& path, const Grid<std::uint8_t>& img);
Grid<std::uint8_t> read_png_gray(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Little-endian float32 payload of a grid (row-major).
std::vector<std::uint8_t> float32_bytes(const FloatGrid& g);
FloatGrid float32_grid(std::span<const std::uint8_t> bytes, int rows, int cols);

/// `<path>` holds raw float32, `<path>.json` the sidecar {dtype, shape, units}.
void write_float_grid(const std::filesystem::path& path, const FloatGrid& g,
                      std::string_view units);
FloatGrid read_float_grid(const std::filesystem::path& path);

}  // namespace emfplan::io
