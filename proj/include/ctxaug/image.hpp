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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ctxaug/error.hpp"

namespace ctxaug {

/// Interleaved 8-bit image, row-major. channels is 1, 3 (RGB) or 4 (RGBA).
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, std::uint8_t fill = 0)
      : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1 || channels < 1 || channels > 4) {
      throw ValidationError("invalid image geometry");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::uint8_t* row(int y) { return data_.data() + index(0, y, 0); }
  const std::uint8_t* row(int y) const { return data_.data() + index(0, y, 0); }

  std::vector<std::uint8_t>& data() noexcept { return data_; }
  const std::vector<std::uint8_t>& data() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel grid of T.
template <typename T>
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw ValidationError("invalid plane geometry");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool operator==(const Plane&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Binary mask, values 0 or 1.
using Mask = Plane<std::uint8_t>;
/// Per-pixel opacity in [0, 1].
using AlphaMap = Plane<double>;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Number of set pixels.
std::size_t count_set(const Mask& mask);

/// Rounds half-up and clamps to [0, 255].
std::uint8_t to_u8(double v);

/// Copies the w x h window at (x, y). The window must lie inside the image.
Image crop(const Image& image, int x, int y, int w, int h);

/// Drops or adds an alpha channel; RGB <-> RGBA only.
Image to_rgb(const Image& image);

}  // namespace ctxaug
