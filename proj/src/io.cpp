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

#include "emfplan/io.hpp"

#include <png.h>

#include <csetjmp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

namespace emfplan::io {
namespace {

static_assert(std::endian::native == std::endian::little,
              "float32 grids are stored little-endian");

struct PngWriteBuffer {
  std::vector<std::uint8_t> bytes;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* buf = static_cast<PngWriteBuffer*>(png_get_io_ptr(png));
  buf->bytes.insert(buf->bytes.end(), data, data + len);
}
void png_flush_cb(png_structp) {}

struct PngReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + len > cur->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(out, cur->bytes.data() + cur->offset, len);
  cur->offset += len;
}

void png_error_cb(png_structp png, png_const_charp msg) {
  auto* slot = static_cast<std::string*>(png_get_error_ptr(png));
  if (slot) *slot = msg;
  png_longjmp(png, 1);
}
void png_warning_cb(png_structp, png_const_charp) {}

// Only trivially destructible locals live in the setjmp frames below.
bool encode_png_raw(png_structp png, png_infop info, PngWriteBuffer* buf, int width, int height,
                    int color_type, int channels, const std::uint8_t* pixels) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_write_fn(png, buf, png_write_cb, png_flush_cb);
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(pixels + static_cast<std::size_t>(r) * width * channels));
  }
  png_write_end(png, nullptr);
  return true;
}

bool read_png_header(png_structp png, png_infop info, PngReadCursor* cur, int* width,
                     int* height, int* color, int* depth) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_read_fn(png, cur, png_read_cb);
  png_read_info(png, info);
  *width = static_cast<int>(png_get_image_width(png, info));
  *height = static_cast<int>(png_get_image_height(png, info));
  *color = png_get_color_type(png, info);
  *depth = png_get_bit_depth(png, info);
  return true;
}

bool read_png_rows(png_structp png, std::uint8_t* out, int width, int height) {
  if (setjmp(png_jmpbuf(png))) return false;
  for (int r = 0; r < height; ++r) png_read_row(png, out + static_cast<std::size_t>(r) * width, nullptr);
  png_read_end(png, nullptr);
  return true;
}

std::vector<std::uint8_t> encode_png(int width, int height, int color_type, int channels,
                                     std::span<const std::uint8_t> pixels) {
  std::string err;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_cb, png_warning_cb);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  PngWriteBuffer buf;
  const bool ok =
      info && encode_png_raw(png, info, &buf, width, height, color_type, channels, pixels.data());
  png_destroy_write_struct(&png, &info);
  if (!ok) throw IoError("PNG encode failed: " + err);
  return std::move(buf.bytes);
}

}  // namespace

std::vector<std::uint8_t> encode_png_gray(const Grid<std::uint8_t>& img) {
  return encode_png(img.cols(), img.rows(), PNG_COLOR_TYPE_GRAY, 1, img.values());
}

std::vector<std::uint8_t> encode_png_rgb(int width, int height,
                                         std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw ShapeMismatch("RGB buffer size does not match image extent");
  return encode_png(width, height, PNG_COLOR_TYPE_RGB, 3, rgb);
}

Grid<std::uint8_t> decode_png_gray(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw IoError("not a PNG");
  std::string err;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_cb, png_warning_cb);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngReadCursor cur{bytes, 0};
  int width = 0, height = 0, color = 0, depth = 0;
  if (!info || !read_png_header(png, info, &cur, &width, &height, &color, &depth)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG decode failed: " + err);
  }
  if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("expected an 8-bit grayscale PNG");
  }
  Grid<std::uint8_t> out(height, width);
  const bool ok = read_png_rows(png, out.values().data(), width, height);
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw IoError("PNG decode failed: " + err);
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string read_text(const std::filesystem::path& path) {
  auto b = read_bytes(path);
  return {b.begin(), b.end()};
}

void write_png_gray(const std::filesystem::path& path, const Grid<std::uint8_t>& img) {
  write_bytes(path, encode_png_gray(img));
}

Grid<std::uint8_t> read_png_gray(const std::filesystem::path& path) {
  return decode_png_gray(read_bytes(path));
}

namespace {
constexpr std::string_view kB64 =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += kB64[v & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += (i + 1 < bytes.size()) ? kB64[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lut;
  lut.fill(-1);
  for (std::size_t k = 0; k < kB64.size(); ++k) lut[static_cast<unsigned char>(kB64[k])] = static_cast<int>(k);
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    const int v = lut[static_cast<unsigned char>(ch)];
    if (v < 0) throw IoError("invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

std::vector<std::uint8_t> float32_bytes(const FloatGrid& g) {
  std::vector<std::uint8_t> out(g.size() * sizeof(float));
  std::memcpy(out.data(), g.values().data(), out.size());
  return out;
}

FloatGrid float32_grid(std::span<const std::uint8_t> bytes, int rows, int cols) {
  FloatGrid g(rows, cols);
  if (bytes.size() != g.size() * sizeof(float))
    throw ShapeMismatch("float32 payload has " + std::to_string(bytes.size()) +
                        " bytes, expected " + std::to_string(g.size() * sizeof(float)));
  std::memcpy(g.values().data(), bytes.data(), bytes.size());
  return g;
}

void write_float_grid(const std::filesystem::path& path, const FloatGrid& g,
                      std::string_view units) {
  write_bytes(path, float32_bytes(g));
  nlohmann::json side = {{"dtype", "float32"},
                         {"shape", {g.rows(), g.cols()}},
                         {"order", "row-major"},
                         {"endianness", "little"},
                         {"units", units}};
  write_text(path.string() + ".json", side.dump(2));
}

FloatGrid read_float_grid(const std::filesystem::path& path) {
  const auto side = nlohmann::json::parse(read_text(path.string() + ".json"));
  if (side.at("dtype") != "float32") throw IoError("unsupported dtype in " + path.string());
  const int rows = side.at("shape").at(0);
  const int cols = side.at("shape").at(1);
  return float32_grid(read_bytes(path), rows, cols);
}

}  // namespace emfplan::io
