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

#include "ctxaug/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ctxaug {

std::size_t count_set(const Mask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.data().begin(), mask.data().end(), [](std::uint8_t v) { return v != 0; }));
}

std::uint8_t to_u8(double v) {
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

Image crop(const Image& image, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > image.width() || y + h > image.height()) {
    throw ValidationError("crop window outside image");
  }
  Image out(w, h, image.channels());
  const std::size_t row_bytes = static_cast<std::size_t>(w) * image.channels();
  for (int r = 0; r < h; ++r) {
    std::memcpy(out.row(r), image.row(y + r) + static_cast<std::size_t>(x) * image.channels(),
                row_bytes);
  }
  return out;
}

Image to_rgb(const Image& image) {
  if (image.channels() == 3) return image;
  Image out(image.width(), image.height(), 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = image.at(x, y, image.channels() >= 3 ? c : 0);
      }
    }
  }
  return out;
}

}  // namespace ctxaug
