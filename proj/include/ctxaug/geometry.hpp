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

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxaug/rng.hpp"

namespace ctxaug {

/// Axis-aligned box in pixel coordinates, half-open: [x0, x1) x [y0, y1).
/// Coordinates are continuous; boxes read from annotations are integral.
class BoundingBox {
 public:
  BoundingBox(double x0, double y0, double x1, double y1);

  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  double x1() const noexcept { return x1_; }
  double y1() const noexcept { return y1_; }
  double width() const noexcept { return x1_ - x0_; }
  double height() const noexcept { return y1_ - y0_; }
  double area() const noexcept { return width() * height(); }
  double center_x() const noexcept { return 0.5 * (x0_ + x1_); }
  double center_y() const noexcept { return 0.5 * (y0_ + y1_); }

  bool inside(double w, double h) const noexcept {
    return x0_ >= 0 && y0_ >= 0 && x1_ <= w && y1_ <= h;
  }
  bool contains(const BoundingBox& o) const noexcept {
    return x0_ <= o.x0_ && y0_ <= o.y0_ && x1_ >= o.x1_ && y1_ >= o.y1_;
  }

  bool operator==(const BoundingBox&) const = default;

 private:
  double x0_, y0_, x1_, y1_;
};

std::string to_string(const BoundingBox& box);

/// Intersection over union of continuous areas.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Largest IoU of box against any of others; 0 for an empty list.
double max_iou(const BoundingBox& box, std::span<const BoundingBox> others);

/// Aspect ratio (width / height) and relative scale sqrt(box area / image area).
struct Shape {
  double aspect = 1.0;
  double scale = 1.0;
};

Shape shape_of(const BoundingBox& box, double image_w, double image_h);

/// Inverse of shape_of around a centre, clipped to the image. Returns nullopt
/// when either clipped side is shorter than kMinCandidateSide.
std::optional<BoundingBox> box_from_shape(const Shape& shape, double center_x, double center_y,
                                          double image_w, double image_h);

inline constexpr double kMinCandidateSide = 8.0;

/// Normalised 30 x 30 joint histogram over (aspect, scale) with linear bins
/// spanning the observed range.
class ShapeHistogram {
 public:
  static constexpr int kBins = 30;

  ShapeHistogram(std::vector<double> a_edges, std::vector<double> s_edges, std::vector<double> bins);

  const std::vector<double>& a_edges() const noexcept { return a_edges_; }
  const std::vector<double>& s_edges() const noexcept { return s_edges_; }
  /// Row-major: bins()[ai * kBins + si].
  const std::vector<double>& bins() const noexcept { return bins_; }
  double weight(int ai, int si) const { return bins_[static_cast<std::size_t>(ai) * kBins + si]; }

  nlohmann::json to_json() const;
  static ShapeHistogram from_json(const nlohmann::json& j);

 private:
  std::vector<double> a_edges_, s_edges_, bins_;
  std::vector<double> cumulative_;
  friend Shape sample_shape(const ShapeHistogram&, Rng&);
};

ShapeHistogram build_shape_histogram(std::span<const Shape> shapes);

/// Picks a bin with probability equal to its weight, then a point uniformly inside it.
Shape sample_shape(const ShapeHistogram& hist, Rng& rng);

}  // namespace ctxaug
