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

#include "ctxaug/instance_bank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "ctxaug/error.hpp"
#include "ctxaug/png_io.hpp"

namespace ctxaug {

namespace fs = std::filesystem;

Mask InstanceCutout::mask() const {
  Mask m(rgba.width(), rgba.height(), 0);
  for (int y = 0; y < rgba.height(); ++y) {
    for (int x = 0; x < rgba.width(); ++x) m.at(x, y) = rgba.at(x, y, 3) >= 128 ? 1 : 0;
  }
  return m;
}

InstanceCutout extract_instance(const Image& image, const Mask& mask, std::string category,
                                std::string source_image_id, int source_object_index) {
  if (mask.width() != image.width() || mask.height() != image.height()) {
    throw ValidationError("mask and image sizes differ");
  }
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw ValidationError("cannot extract an instance from an empty mask");
  const int w = x1 - x0 + 1, h = y1 - y0 + 1;
  Image rgba(w, h, 4, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x0 + x, y0 + y)) continue;
      for (int c = 0; c < 3; ++c) {
        rgba.at(x, y, c) = image.at(x0 + x, y0 + y, image.channels() >= 3 ? c : 0);
      }
      rgba.at(x, y, 3) = 255;
    }
  }
  return {std::move(category), std::move(rgba), BoundingBox(x0, y0, x1 + 1, y1 + 1),
          std::move(source_image_id), source_object_index};
}

std::optional<ScaleInterval> feasible_scale_interval(double w, double h, const MatchQuery& q) {
  if (!(q.scale_lo > 0) || q.scale_hi < q.scale_lo || !(q.min_area_fraction > 0) ||
      q.min_area_fraction > 1) {
    throw ValidationError("invalid match query");
  }
  const double cw = q.candidate.width(), ch = q.candidate.height();
  const double need = q.min_area_fraction * (cw * ch);
  auto fits = [&](double s) { return s * w <= cw && s * h <= ch; };
  auto covers = [&](double s) { return s * s * w * h >= need; };
  constexpr double kInf = std::numeric_limits<double>::infinity();

  double hi = std::min({q.scale_hi, cw / w, ch / h});
  while (hi > 0 && !fits(hi)) hi = std::nextafter(hi, 0.0);
  while (hi < q.scale_hi && fits(std::nextafter(hi, kInf))) hi = std::nextafter(hi, kInf);

  double lo = std::max(q.scale_lo, std::sqrt(need / (w * h)));
  while (lo < kInf && !covers(lo)) lo = std::nextafter(lo, kInf);
  while (lo > q.scale_lo && covers(std::nextafter(lo, 0.0))) lo = std::nextafter(lo, 0.0);

  if (!(lo <= hi)) return std::nullopt;
  return ScaleInterval{lo, hi};
}

std::optional<ScaleInterval> feasible_scale_interval(const InstanceCutout& instance,
                                                     const MatchQuery& q) {
  return feasible_scale_interval(instance.width(), instance.height(), q);
}

void InstanceBank::add(InstanceCutout cutout) {
  if (cutout.rgba.channels() != 4) throw ValidationError("bank entries must be RGBA");
  entries_.push_back(std::move(cutout));
}

std::vector<std::size_t> InstanceBank::indices_of(std::string_view category) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].category == category) out.push_back(i);
  }
  return out;
}

bool InstanceBank::has_category(std::string_view category) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const InstanceCutout& c) { return c.category == category; });
}

std::vector<std::string> InstanceBank::categories() const {
  std::set<std::string> names;
  for (const auto& e : entries_) names.insert(e.category);
  return {names.begin(), names.end()};
}

void InstanceBank::save(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json index = nlohmann::json::array();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    write_file(dir / name, encode_png(e.rgba));
    index.push_back({{"file", name},
                     {"category", e.category},
                     {"w", e.width()},
                     {"h", e.height()},
                     {"source_image_id", e.source_image_id},
                     {"source_object_index", e.source_object_index},
                     {"tight_box",
                      {e.tight_box.x0(), e.tight_box.y0(), e.tight_box.x1(), e.tight_box.y1()}}});
  }
  const std::string text = index.dump(2) + "\n";
  write_file(dir / "index.json",
             std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

InstanceBank InstanceBank::load(const fs::path& dir) {
  const auto bytes = read_file(dir / "index.json");
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("bank index: ") + e.what(), 0);
  }
  InstanceBank bank;
  try {
    for (const auto& item : index) {
      Image rgba = decode_png(read_file(dir / item.at("file").get<std::string>()));
      if (rgba.channels() != 4) throw ValidationError("bank image without alpha channel");
      const int w = item.at("w").get<int>(), h = item.at("h").get<int>();
      if (rgba.width() != w || rgba.height() != h) {
        throw ValidationError("bank entry size does not match index");
      }
      BoundingBox tight(0, 0, w, h);
      if (item.contains("tight_box")) {
        const auto b = item["tight_box"].get<std::vector<double>>();
        if (b.size() != 4) throw SchemaError("bank index: tight_box needs 4 numbers");
        tight = BoundingBox(b[0], b[1], b[2], b[3]);
      }
      bank.add({item.at("category").get<std::string>(), std::move(rgba), tight,
                item.at("source_image_id").get<std::string>(),
                item.at("source_object_index").get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bank index: ") + e.what());
  }
  return bank;
}

InstanceBank build_bank(const Dataset& dataset) {
  InstanceBank bank;
  for (const auto& rec : dataset) {
    if (!rec.masks) continue;
    const auto& objects = rec.annotation.objects;
    for (std::size_t k = 0; k < objects.size(); ++k) {
      if (objects[k].difficult) continue;
      bank.add(extract_instance(rec.image, rec.masks->masks[k], objects[k].category,
                                rec.annotation.image_id, static_cast<int>(k)));
    }
  }
  return bank;
}

std::optional<Match> match_instance(const InstanceBank& bank, const MatchQuery& q,
                                    std::string_view category, Rng& rng) {
  const auto candidates = bank.indices_of(category);
  if (candidates.empty()) {
    throw ValidationError("no bank instances of category '" + std::string(category) + "'");
  }
  std::vector<std::pair<std::size_t, ScaleInterval>> feasible;
  for (std::size_t i : candidates) {
    if (auto iv = feasible_scale_interval(bank.entries()[i], q)) feasible.emplace_back(i, *iv);
  }
  if (feasible.empty()) return std::nullopt;
  const auto& [index, iv] = feasible[rng.below(feasible.size())];
  return Match{index, rng.uniform(iv.lo, iv.hi)};
}

}  // namespace ctxaug
