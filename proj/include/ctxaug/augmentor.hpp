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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxaug/blender.hpp"
#include "ctxaug/context_sampler.hpp"
#include "ctxaug/dataset_io.hpp"
#include "ctxaug/geometry.hpp"
#include "ctxaug/instance_bank.hpp"
#include "ctxaug/scorer.hpp"

namespace ctxaug {

enum class AugmentMode { kContext, kRandom, kEnlarge, kRemoveContext };

std::string mode_name(AugmentMode mode);
AugmentMode parse_mode(std::string_view name);  // context | random | enlarge | remove-context

struct AugmentationConfig {
  double paste_probability = 0.5;
  int max_instances = 2;
  int candidates_per_image = 200;
  double score_threshold = 0.8;
  double match_scale_lo = 0.5;
  double match_scale_hi = 1.5;
  double min_area_fraction = 0.8;
  double random_scale_lo = 0.5;
  double random_scale_hi = 2.0;
  double gt_overlap_max = 0.3;
  double enlarge_lo = 1.2;
  double enlarge_hi = 1.5;
  BlendMethod blend = RandomBlend{};
  /// Single-category mode: only images without this category are augmented
  /// and only this category is pasted.
  std::optional<std::string> category;
  std::uint64_t seed = 0;
  ContextGenParams context;  // masking used for candidate scoring

  void validate() const;
};

struct Placement {
  BoundingBox box;
  std::size_t category = 0;  // index into the scorer's class list
  double score = 0.0;
};

/// Exactly n boxes with shapes from hist and uniform centres; boxes that
/// clip below the minimum side are re-drawn.
std::vector<BoundingBox> propose_candidates(int image_w, int image_h, const ShapeHistogram& hist,
                                            int n, Rng& rng);

/// Scores each candidate's masked context and returns those whose best
/// object probability is strictly above the threshold and whose IoU with
/// every GT box is at most gt_overlap_max, sorted by score (stable).
std::vector<Placement> rank_placements(const Image& image, std::span<const BoundingBox> gt,
                                       std::span<const BoundingBox> candidates,
                                       const Scorer& scorer, const AugmentationConfig& cfg,
                                       Rng& rng);

/// Greedy top-score selection of at most max_instances placements with
/// pairwise IoU <= gt_overlap_max.
std::vector<Placement> greedy_select(std::span<const Placement> ranked, double max_overlap,
                                     int max_instances);

/// propose_candidates + rank_placements + greedy_select.
std::vector<Placement> select_placements(const Image& image, std::span<const BoundingBox> gt,
                                         const Scorer& scorer, const ShapeHistogram& hist,
                                         const AugmentationConfig& cfg, Rng& rng);

/// Everything augment_image needs besides the record itself.
struct AugmentContext {
  const InstanceBank* bank = nullptr;
  const Scorer* scorer = nullptr;          // context mode only
  const ShapeHistogram* hist = nullptr;    // context mode only
};

/// Copy-paste augmentation of one image in context or random mode. The
/// record is returned unchanged (with empty provenance) when the paste
/// coin flip fails or, in single-category mode, when the image already
/// holds the category.
AugmentedRecord augment_image(const DatasetRecord& record, const AugmentContext& ctx,
                              const AugmentationConfig& cfg, Rng& rng, AugmentMode mode);

/// New box of `factor` times the size, same centre, rounded outward and
/// clipped to the image.
BoundingBox enlarged_box(const BoundingBox& box, double factor, int image_w, int image_h);

/// Re-pastes every instance enlarged by a factor in [enlarge_lo, enlarge_hi]
/// over itself; GT boxes are replaced by the enlarged boxes.
AugmentedRecord enlarge_reblend(const DatasetRecord& record, const AugmentationConfig& cfg,
                                Rng& rng);

/// Drops every image containing `category` and pastes each dropped instance
/// onto its own background image at a uniformly random location.
std::vector<AugmentedRecord> remove_context_transform(const Dataset& dataset,
                                                      const std::string& category,
                                                      const InstanceBank& bank,
                                                      const AugmentationConfig& cfg, Rng& rng);

/// Per-image deterministic augmentation of a whole dataset in context,
/// random or enlarge mode, one RNG stream per image id.
std::vector<AugmentedRecord> augment_dataset(const Dataset& dataset, const AugmentContext& ctx,
                                             const AugmentationConfig& cfg, AugmentMode mode,
                                             int jobs = 0);

}  // namespace ctxaug
