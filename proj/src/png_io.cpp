// Copyright (c) 2026 The ctxaug Authors. All rights reserved.
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

#include "ctxaug/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace ctxaug {
namespace {

struct ReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
  char message[256] = {0};
};

void on_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<ReadState*>(png_get_error_ptr(png));
  std::strncpy(state->message, msg, sizeof(state->message) - 1);
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

void on_read(png_structp png, png_bytep out, png_size_t n) {
  auto* state = static_cast<ReadState*>(png_get_io_ptr(png));
  if (state->offset + n > state->bytes.size()) {
    png_error(png, "truncated PNG data");
  }
  std::memcpy(out, state->bytes.data() + state->offset, n);
  state->offset += n;
}

enum class Target { kColor, kIndices };

// Returns raw rows plus the resulting channel count.
std::vector<std::uint8_t> read_rows(std::span<const std::uint8_t> bytes, Target target, int& width,
                                    int& height, int& channels) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw ValidationError("not a PNG file");
  }
  ReadState state{bytes};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, on_error, on_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng initialisation failed");
  }
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError(std::string("PNG decode failed: ") + state.message);
  }
  png_set_read_fn(png, &state, on_read);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));

  if (target == Target::kIndices) {
    if (color_type != PNG_COLOR_TYPE_PALETTE && color_type != PNG_COLOR_TYPE_GRAY) {
      png_destroy_read_struct(&png, &info, nullptr);
      throw ValidationError("instance mask must be a paletted or grayscale PNG");
    }
    if (depth == 16) png_set_strip_16(png);
    if (depth < 8) png_set_packing(png);
  } else {
    if (depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
  }
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  pixels.resize(row_bytes * static_cast<std::size_t>(height));
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[y] = pixels.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

Rgb palette_colour(int k) {
  // VOC colour map: bit-interleaved RGB of the label.
  Rgb c;
  int v = k;
  for (int i = 0; i < 8; ++i) {
    c.r |= static_cast<std::uint8_t>(((v >> 0) & 1) << (7 - i));
    c.g |= static_cast<std::uint8_t>(((v >> 1) & 1) << (7 - i));
    c.b |= static_cast<std::uint8_t>(((v >> 2) & 1) << (7 - i));
    v >>= 3;
  }
  return c;
}

struct WriteState {
  Bytes* out;
  char message[256] = {0};
};

void on_write_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<WriteState*>(png_get_error_ptr(png));
  std::strncpy(state->message, msg, sizeof(state->message) - 1);
  png_longjmp(png, 1);
}

void on_write(png_structp png, png_bytep data, png_size_t n) {
  auto* state = static_cast<WriteState*>(png_get_io_ptr(png));
  state->out->insert(state->out->end(), data, data + n);
}

void on_flush(png_structp) {}

Bytes write_png(int width, int height, int color_type, const std::uint8_t* pixels,
                std::size_t row_bytes, const std::vector<png_color>* palette) {
  Bytes out;
  WriteState state{&out};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state, on_write_error, on_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed");
  }
  std::vector<png_const_bytep> rows(static_cast<std::size_t>(height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(std::string("PNG encode failed: ") + state.message);
  }
  png_set_write_fn(png, &state, on_write, on_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (palette) {
    png_set_PLTE(png, info, palette->data(), static_cast<int>(palette->size()));
  }
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) rows[y] = pixels + row_bytes * y;
  png_write_rows(png, const_cast<png_bytepp>(rows.data()), static_cast<png_uint_32>(height));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

Image decode_png(std::span<const std::uint8_t> bytes) {
  int w = 0, h = 0, ch = 0;
  auto pixels = read_rows(bytes, Target::kColor, w, h, ch);
  Image out(w, h, ch);
  out.data() = std::move(pixels);
  return out;
}

Plane<std::uint8_t> decode_png_indices(std::span<const std::uint8_t> bytes) {
  int w = 0, h = 0, ch = 0;
  auto pixels = read_rows(bytes, Target::kIndices, w, h, ch);
  if (ch != 1) throw ValidationError("instance mask must have a single channel");
  Plane<std::uint8_t> out(w, h);
  out.data() = std::move(pixels);
  return out;
}

Bytes encode_png(const Image& image) {
  int type = 0;
  switch (image.channels()) {
    case 1: type = PNG_COLOR_TYPE_GRAY; break;
    case 3: type = PNG_COLOR_TYPE_RGB; break;
    case 4: type = PNG_COLOR_TYPE_RGBA; break;
    default: throw ValidationError("unsupported channel count for PNG");
  }
  return write_png(image.width(), image.height(), type, image.data().data(),
                   static_cast<std::size_t>(image.width()) * image.channels(), nullptr);
}

Bytes encode_paletted_png(const Plane<std::uint8_t>& indices) {
  std::vector<png_color> palette(256);
  for (int k = 0; k < 256; ++k) {
    const Rgb c = k == 255 ? Rgb{224, 224, 192} : palette_colour(k);
    palette[k] = png_color{c.r, c.g, c.b};
  }
  return write_png(indices.width(), indices.height(), PNG_COLOR_TYPE_PALETTE,
                   indices.data().data(), static_cast<std::size_t>(indices.width()), &palette);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace ctxaug
