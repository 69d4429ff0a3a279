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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ctxaug/dataset_io.hpp"
#include "ctxaug/geometry.hpp"
#include "ctxaug/image.hpp"
#include "ctxaug/rng.hpp"

namespace ctxaug {

/// Masked, resized neighbourhood of a box. label is a category index in
/// [0, K) or K for background.
struct ContextualSample {
  Image pixels;
  BoundingBox masked_region;  // integral, in sample coordinates
  int label = 0;
};

struct ContextGenParams {
  double dilation_lo = 1.2;
  double dilation_hi = 2.0;
  int contexts_per_box = 3;
  int bg_ratio = 3;
  double bg_iou_max = 0.3;
  int out_size = 300;
  Rgb fill{128, 128, 128};
  int max_rejections = 1000;

  void validate() const;
};

/// Neighbourhood geometry: box dilated per axis, then shifted by the jitter
/// fractions in [0, 1] (0.5 = centred) while keeping box inside.
struct NeighbourhoodDraw {
  double dilation_x = 1.5;
  double dilation_y = 1.5;
  double jitter_x = 0.5;
  double jitter_y = 0.5;
};

NeighbourhoodDraw draw_neighbourhood(const ContextGenParams& params, Rng& rng);

/// Integral neighbourhood window (clipped to the image) for a draw.
BoundingBox neighbourhood_of(const BoundingBox& box, const NeighbourhoodDraw& draw, int image_w,
                             int image_h);

/// Crops `neighbourhood`, resizes it to out_size and fills the mapped box.
ContextualSample make_context(const Image& image, const BoundingBox& box,
                              const BoundingBox& neighbourhood, const ContextGenParams& params,
                              int label);

ContextualSample positive_context(const Image& image, const BoundingBox& gt_box, int label,
                                  const ContextGenParams& params, Rng& rng);

/// Rejection-samples a box whose IoU with every ground-truth box is at most
/// bg_iou_max. Throws ValidationError("image too crowded") after
/// max_rejections consecutive failures.
BoundingBox sample_background_box(int image_w, int image_h, std::span<const BoundingBox> gt,
                                  const ShapeHistogram& hist, const ContextGenParams& params,
                                  Rng& rng);

ContextualSample background_context(const Image& image, std::span<const BoundingBox> gt,
                                    const ShapeHistogram& hist, int background_label,
                                    const ContextGenParams& params, Rng& rng);

/// Histogram of the (aspect, scale) shapes of every ground-truth box.
ShapeHistogram dataset_shape_histogram(const Dataset& dataset);

/// Streams the context dataset: contexts_per_box positives per GT box and
/// bg_ratio times as many backgrounds, each image on its own seeded stream.
/// Samples are delivered in a seeded shuffled order. Labels index
/// class_names; background is class_names.size().
void for_each_context(const Dataset& dataset, const std::vector<std::string>& class_names,
                      const ContextGenParams& params, std::uint64_t seed,
                      const std::function<void(ContextualSample&&)>& sink);

std::vector<ContextualSample> build_context_dataset(const Dataset& dataset,
                                                    const std::vector<std::string>& class_names,
                                                    const ContextGenParams& params,
                                                    std::uint64_t seed);

/// On-disk context set: NNNNNN.png files, labels.csv
/// (file,label,x0,y0,x1,y1) and classes.json.
void write_context_dataset(const std::filesystem::path& dir,
                           const std::vector<std::string>& class_names,
                           std::span<const ContextualSample> samples);

struct ContextDatasetFile {
  std::vector<std::string> class_names;
  std::vector<ContextualSample> samples;
};

ContextDatasetFile read_context_dataset(const std::filesystem::path& dir);

}  // namespace ctxaug
