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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ctxaug/image.hpp"

namespace ctxaug {

using Bytes = std::vector<std::uint8_t>;

/// Decodes any 8-bit-or-less PNG to RGB, or RGBA when the file carries alpha.
Image decode_png(std::span<const std::uint8_t> bytes);

/// Decodes a paletted or 8-bit grayscale PNG to its raw sample values
/// (palette indices for paletted files), without palette expansion.
Plane<std::uint8_t> decode_png_indices(std::span<const std::uint8_t> bytes);

Bytes encode_png(const Image& image);

/// Writes a paletted PNG. Index k uses palette[k] when present, otherwise a
/// generated colour; 255 is rendered in the VOC void colour.
Bytes encode_paletted_png(const Plane<std::uint8_t>& indices);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace ctxaug
