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

#include "ctxaug/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ctxaug/error.hpp"

namespace ctxaug {

BoundingBox::BoundingBox(double x0, double y0, double x1, double y1)
    : x0_(x0), y0_(y0), x1_(x1), y1_(y1) {
  if (!(x1 > x0) || !(y1 > y0) || !std::isfinite(x0) || !std::isfinite(y0) ||
      !std::isfinite(x1) || !std::isfinite(y1)) {
    throw ValidationError("degenerate box " + to_string(*this));
  }
}

std::string to_string(const BoundingBox& box) {
  std::ostringstream os;
  os << '(' << box.x0() << ',' << box.y0() << ',' << box.x1() << ',' << box.y1() << ')';
  return os.str();
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

double max_iou(const BoundingBox& box, std::span<const BoundingBox> others) {
  double best = 0.0;
  for (const auto& o : others) best = std::max(best, iou(box, o));
  return best;
}

Shape shape_of(const BoundingBox& box, double image_w, double image_h) {
  return {box.width() / box.height(), std::sqrt(box.area() / (image_w * image_h))};
}

std::optional<BoundingBox> box_from_shape(const Shape& shape, double center_x, double center_y,
                                          double image_w, double image_h) {
  if (!(shape.aspect > 0) || !(shape.scale > 0)) {
    throw ValidationError("shape parameters must be positive");
  }
  const double area = image_w * image_h;
  const double w = shape.scale * std::sqrt(area * shape.aspect);
  const double h = shape.scale * std::sqrt(area / shape.aspect);
  const double x0 = std::max(0.0, center_x - 0.5 * w);
  const double y0 = std::max(0.0, center_y - 0.5 * h);
  const double x1 = std::min(image_w, center_x + 0.5 * w);
  const double y1 = std::min(image_h, center_y + 0.5 * h);
  if (x1 - x0 < kMinCandidateSide || y1 - y0 < kMinCandidateSide) return std::nullopt;
  return BoundingBox(x0, y0, x1, y1);
}

ShapeHistogram::ShapeHistogram(std::vector<double> a_edges, std::vector<double> s_edges,
                               std::vector<double> bins)
    : a_edges_(std::move(a_edges)), s_edges_(std::move(s_edges)), bins_(std::move(bins)) {
  if (a_edges_.size() != kBins + 1 || s_edges_.size() != kBins + 1 ||
      bins_.size() != static_cast<std::size_t>(kBins) * kBins) {
    throw ValidationError("shape histogram must be 30x30 with 31 edges per axis");
  }
  for (int i = 0; i < kBins; ++i) {
    if (!(a_edges_[i + 1] > a_edges_[i]) || !(s_edges_[i + 1] > s_edges_[i])) {
      throw ValidationError("shape histogram edges must be strictly increasing");
    }
  }
  double total = 0.0;
  for (double w : bins_) {
    if (!(w >= 0) || !std::isfinite(w)) throw ValidationError("shape histogram weight is negative");
    total += w;
  }
  if (!(total > 0)) throw ValidationError("shape histogram is empty");
  cumulative_.resize(bins_.size());
  std::partial_sum(bins_.begin(), bins_.end(), cumulative_.begin());
}

nlohmann::json ShapeHistogram::to_json() const {
  return {{"a_edges", a_edges_}, {"s_edges", s_edges_}, {"bins", bins_}};
}

ShapeHistogram ShapeHistogram::from_json(const nlohmann::json& j) {
  try {
    return ShapeHistogram(j.at("a_edges").get<std::vector<double>>(),
                          j.at("s_edges").get<std::vector<double>>(),
                          j.at("bins").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("shape histogram: ") + e.what());
  }
}

namespace {

std::vector<double> linear_edges(double lo, double hi) {
  std::vector<double> edges(ShapeHistogram::kBins + 1);
  for (int i = 0; i <= ShapeHistogram::kBins; ++i) {
    edges[i] = lo + (hi - lo) * i / ShapeHistogram::kBins;
  }
  edges.back() = hi;
  return edges;
}

int bin_of(double v, const std::vector<double>& edges) {
  const double lo = edges.front(), hi = edges.back();
  const int i = static_cast<int>(std::floor((v - lo) / (hi - lo) * ShapeHistogram::kBins));
  return std::clamp(i, 0, ShapeHistogram::kBins - 1);
}

}  // namespace

ShapeHistogram build_shape_histogram(std::span<const Shape> shapes) {
  if (shapes.empty()) throw ValidationError("cannot build a shape histogram from no boxes");
  constexpr double kPad = 1e-6;
  double a_lo = shapes[0].aspect, a_hi = a_lo, s_lo = shapes[0].scale, s_hi = s_lo;
  for (const auto& s : shapes) {
    a_lo = std::min(a_lo, s.aspect);
    a_hi = std::max(a_hi, s.aspect);
    s_lo = std::min(s_lo, s.scale);
    s_hi = std::max(s_hi, s.scale);
  }
  auto a_edges = linear_edges(a_lo - kPad, a_hi + kPad);
  auto s_edges = linear_edges(s_lo - kPad, s_hi + kPad);
  std::vector<double> bins(static_cast<std::size_t>(ShapeHistogram::kBins) * ShapeHistogram::kBins);
  for (const auto& s : shapes) {
    bins[static_cast<std::size_t>(bin_of(s.aspect, a_edges)) * ShapeHistogram::kBins +
         bin_of(s.scale, s_edges)] += 1.0;
  }
  const double n = static_cast<double>(shapes.size());
  for (double& w : bins) w /= n;
  return ShapeHistogram(std::move(a_edges), std::move(s_edges), std::move(bins));
}

Shape sample_shape(const ShapeHistogram& hist, Rng& rng) {
  const auto& cum = hist.cumulative_;
  const double u = rng.uniform() * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  auto idx = static_cast<std::size_t>(it - cum.begin());
  // Skip zero-weight bins that share the same cumulative value.
  while (idx < cum.size() && hist.bins_[idx] == 0.0) ++idx;
  if (idx >= cum.size()) {
    idx = cum.size() - 1;
    while (hist.bins_[idx] == 0.0) --idx;
  }
  const int ai = static_cast<int>(idx / ShapeHistogram::kBins);
  const int si = static_cast<int>(idx % ShapeHistogram::kBins);
  const auto& ae = hist.a_edges();
  const auto& se = hist.s_edges();
  return {rng.uniform(ae[ai], ae[ai + 1]), rng.uniform(se[si], se[si + 1])};
}

}  // namespace ctxaug
