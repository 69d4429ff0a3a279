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
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ctxaug/geometry.hpp"
#include "ctxaug/image.hpp"

namespace ctxaug {

struct ObjectAnnotation {
  std::string category;
  BoundingBox box;
  bool difficult = false;

  bool operator==(const ObjectAnnotation&) const = default;
};

/// One image's ground truth. Boxes are 0-based half-open pixel boxes.
struct ImageAnnotation {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<ObjectAnnotation> objects;

  bool operator==(const ImageAnnotation&) const = default;

  std::vector<BoundingBox> boxes() const;
  bool has_category(std::string_view category) const;
};

/// Full-image binary masks, index-aligned with ImageAnnotation::objects.
struct InstanceMaskSet {
  std::vector<Mask> masks;
};

/// Parses the VOC annotation dialect. VOC's 1-based inclusive pixel
/// coordinates become 0-based half-open: (xmin - 1, ymin - 1, xmax, ymax).
ImageAnnotation parse_annotation(std::string_view xml);

/// Inverse of parse_annotation.
std::string serialize_annotation(const ImageAnnotation& ann);

/// Decodes a VOC SegmentationObject PNG: value k in [1, N] marks object k,
/// 0 is background and 255 is void.
InstanceMaskSet decode_instance_mask(std::span<const std::uint8_t> png_bytes,
                                     const ImageAnnotation& ann);
InstanceMaskSet decode_instance_mask(const Plane<std::uint8_t>& indices, const ImageAnnotation& ann);

/// Inverse of decode_instance_mask; masks must be disjoint.
Plane<std::uint8_t> encode_instance_indices(const InstanceMaskSet& masks, int width, int height);

struct PasteRecord {
  std::string source_image_id;
  int source_object_index = 0;
  std::string category;
  BoundingBox box;
  double scale = 1.0;
  std::string blend;
};

struct Provenance {
  std::string image_id;
  std::uint64_t seed = 0;
  std::string mode;
  std::vector<PasteRecord> pastes;

  nlohmann::json to_json() const;
};

struct AugmentedRecord {
  Image image;
  ImageAnnotation annotation;
  Provenance provenance;
};

struct WrittenPaths {
  std::filesystem::path image;
  std::filesystem::path annotation;
  std::filesystem::path provenance;
};

/// Writes JPEGImages/<id>.png, Annotations/<id>.xml and Provenance/<id>.json
/// under out_dir, creating the directories as needed.
WrittenPaths write_augmented(const AugmentedRecord& rec, const std::filesystem::path& out_dir);

/// An annotated image plus its instance masks when the dataset has them.
struct DatasetRecord {
  ImageAnnotation annotation;
  Image image;
  std::optional<InstanceMaskSet> masks;
};

using Dataset = std::vector<DatasetRecord>;

/// Loads a VOC-layout directory: Annotations/*.xml, JPEGImages/<id>.png and,
/// when present, SegmentationObject/<id>.png. Records are ordered by id.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes a dataset in the layout load_dataset reads.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Sorted, de-duplicated category names across the dataset.
std::vector<std::string> collect_categories(const Dataset& dataset);

}  // namespace ctxaug
