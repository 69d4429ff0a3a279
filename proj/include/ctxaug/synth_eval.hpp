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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxaug/augmentor.hpp"
#include "ctxaug/dataset_io.hpp"
#include "ctxaug/image.hpp"
#include "ctxaug/rng.hpp"
#include "ctxaug/scorer.hpp"

namespace ctxaug {

enum class SynthShape { kEllipse, kRectangle };

/// A category confined to the horizontal band [y_lo, y_hi) (fractions of the
/// image height); the rule holds when a box centre lies in the band.
struct SynthCategory {
  std::string name;
  double y_lo = 0.0;
  double y_hi = 1.0;
  Rgb color;
  SynthShape shape = SynthShape::kEllipse;
  Rgb habitat;  // patch colour
};

/// Scenes of textured bands. Every object sits on its category's "habitat"
/// patch, a flat-coloured square about twice its size inside the band.
/// Held-out scenes carry the same patches with no object on them.
struct SynthSpec {
  int image_size = 128;
  int n_images = 60;           // training scenes
  int n_heldout = 30;          // empty-patch scenes used for placement
  int instances_per_image = 2;
  int object_min = 12;
  int object_max = 18;
  double patch_factor = 2.0;
  int texture_amplitude = 12;
  std::vector<Rgb> band_colors{{70, 120, 190}, {125, 135, 115}, {90, 150, 70}};
  std::vector<SynthCategory> categories{
      {"A", 0.0, 1.0 / 3.0, {200, 40, 40}, SynthShape::kEllipse, {205, 185, 95}},
      {"B", 2.0 / 3.0, 1.0, {40, 40, 200}, SynthShape::kRectangle, {150, 90, 160}}};
  std::uint64_t seed = 0;

  /// Throws ValidationError when bands overlap or a band cannot hold a patch.
  void validate() const;
  nlohmann::json to_json() const;
  /// Hex FNV-1a of the canonical JSON dump.
  std::string hash() const;
};

/// Training scenes with exact instance masks, or the held-out empty-patch
/// scenes when heldout is true. Each scene has its own seeded stream.
Dataset generate_synthetic_dataset(const SynthSpec& spec, Rng& rng, bool heldout = false);

/// Fraction of placements whose box centre satisfies their category's rule;
/// 0 for an empty list.
double rule_consistency(std::span<const ObjectAnnotation> placements, const SynthSpec& spec);

/// Mean over categories of the band area fraction: the consistency of a
/// placement that ignores the image.
double chance_consistency(const SynthSpec& spec);

struct BenchmarkConfig {
  AugmentationConfig augment;  // paste_probability is forced to 1
  TrainParams train;
  int feature_size = 32;
  int random_passes = 4;  // random placement is cheap; more passes, less variance
  int jobs = 0;
};

struct BenchmarkReport {
  double context_consistency = 0.0;
  double random_consistency = 0.0;
  double scorer_val_accuracy = 0.0;
  double chance = 0.0;
  std::size_t context_placements = 0;
  std::size_t random_placements = 0;
  std::uint64_t seed = 0;
  std::string spec_hash;

  nlohmann::json to_json() const;
  /// Throws SchemaError on missing or mistyped fields.
  static BenchmarkReport from_json(const nlohmann::json& j);
};

BenchmarkReport run_benchmark(const SynthSpec& spec, const BenchmarkConfig& cfg);

}  // namespace ctxaug
