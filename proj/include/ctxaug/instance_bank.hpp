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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxaug/dataset_io.hpp"
#include "ctxaug/geometry.hpp"
#include "ctxaug/image.hpp"
#include "ctxaug/rng.hpp"

namespace ctxaug {

/// A segmented object: RGBA crop of its tight box with alpha = mask.
struct InstanceCutout {
  std::string category;
  Image rgba;
  BoundingBox tight_box;  // in source image coordinates
  std::string source_image_id;
  int source_object_index = 0;

  int width() const noexcept { return rgba.width(); }
  int height() const noexcept { return rgba.height(); }
  Mask mask() const;
};

InstanceCutout extract_instance(const Image& image, const Mask& mask, std::string category,
                                std::string source_image_id, int source_object_index);

struct ScaleInterval {
  double lo = 0;
  double hi = 0;
};

struct MatchQuery {
  BoundingBox candidate;
  double scale_lo = 0.5;
  double scale_hi = 1.5;
  double min_area_fraction = 0.8;
};

/// Scales s in [scale_lo, scale_hi] for which the scaled w x h instance fits
/// inside the candidate (s*w <= cw, s*h <= ch) and covers at least
/// min_area_fraction of it (s*s*w*h >= frac * cw*ch). Endpoints are snapped
/// so they satisfy those inequalities in floating point.
std::optional<ScaleInterval> feasible_scale_interval(double w, double h, const MatchQuery& q);
std::optional<ScaleInterval> feasible_scale_interval(const InstanceCutout& instance,
                                                     const MatchQuery& q);

/// Immutable-after-build collection of cutouts.
class InstanceBank {
 public:
  void add(InstanceCutout cutout);

  const std::vector<InstanceCutout>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::vector<std::size_t> indices_of(std::string_view category) const;
  bool has_category(std::string_view category) const;
  std::vector<std::string> categories() const;

  /// Directory of RGBA PNGs plus index.json.
  void save(const std::filesystem::path& dir) const;
  static InstanceBank load(const std::filesystem::path& dir);

 private:
  std::vector<InstanceCutout> entries_;
};

/// Cuts every non-difficult object with a mask out of the dataset.
InstanceBank build_bank(const Dataset& dataset);

struct Match {
  std::size_t index = 0;
  double scale = 1.0;
};

/// Uniform choice among bank entries of `category` with a feasible scale,
/// then a uniform scale inside that entry's interval.
std::optional<Match> match_instance(const InstanceBank& bank, const MatchQuery& q,
                                    std::string_view category, Rng& rng);

}  // namespace ctxaug
