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

#include "ctxaug/augmentor.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <tuple>

#include <omp.h>

#include "ctxaug/error.hpp"

namespace ctxaug {

std::string mode_name(AugmentMode mode) {
  switch (mode) {
    case AugmentMode::kContext: return "context";
    case AugmentMode::kRandom: return "random";
    case AugmentMode::kEnlarge: return "enlarge";
    case AugmentMode::kRemoveContext: return "remove-context";
  }
  return "unknown";
}

AugmentMode parse_mode(std::string_view name) {
  if (name == "context") return AugmentMode::kContext;
  if (name == "random") return AugmentMode::kRandom;
  if (name == "enlarge") return AugmentMode::kEnlarge;
  if (name == "remove-context") return AugmentMode::kRemoveContext;
  throw ValidationError("unknown mode '" + std::string(name) + "'");
}

void AugmentationConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(paste_probability) || !unit(score_threshold) || !unit(gt_overlap_max) ||
      !(min_area_fraction > 0 && min_area_fraction <= 1)) {
    throw ValidationError("probabilities and thresholds must lie in [0, 1]");
  }
  if (max_instances < 1 || candidates_per_image < 1) {
    throw ValidationError("max_instances and candidates_per_image must be >= 1");
  }
  if (!(match_scale_lo > 0) || match_scale_hi < match_scale_lo || !(random_scale_lo > 0) ||
      random_scale_hi < random_scale_lo || !(enlarge_lo > 0) || enlarge_hi < enlarge_lo) {
    throw ValidationError("scale ranges must satisfy 0 < lo <= hi");
  }
  ctxaug::validate(blend);
  context.validate();
}

std::vector<BoundingBox> propose_candidates(int image_w, int image_h, const ShapeHistogram& hist,
                                            int n, Rng& rng) {
  if (n < 1) throw ValidationError("candidate count must be >= 1");
  std::vector<BoundingBox> out;
  out.reserve(n);
  const long max_draws = 1000L * n;
  for (long draws = 0; static_cast<int>(out.size()) < n; ++draws) {
    if (draws >= max_draws) {
      throw ValidationError("shape histogram yields no boxes of at least 8 px in this image");
    }
    const Shape shape = sample_shape(hist, rng);
    const double cx = rng.uniform(0.0, image_w);
    const double cy = rng.uniform(0.0, image_h);
    if (auto box = box_from_shape(shape, cx, cy, image_w, image_h)) out.push_back(*box);
  }
  return out;
}

namespace {

std::optional<std::size_t> target_index(const Scorer& scorer, const AugmentationConfig& cfg) {
  if (!cfg.category) return std::nullopt;
  const auto& names = scorer.class_names();
  const auto it = std::find(names.begin(), names.end(), *cfg.category);
  if (it == names.end()) {
    throw ValidationError("scorer has no class '" + *cfg.category + "'");
  }
  return static_cast<std::size_t>(it - names.begin());
}

template <typename Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn, int threads = 0) {
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(threads > 0 ? threads : omp_get_max_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

AugmentedRecord unchanged(const DatasetRecord& record, const AugmentationConfig& cfg,
                          AugmentMode mode) {
  return {record.image, record.annotation, Provenance{record.annotation.image_id, cfg.seed,
                                                      mode_name(mode), {}}};
}

PasteRecord paste_record(const InstanceCutout& cutout, const BlendResult& blended, double scale) {
  return {cutout.source_image_id, cutout.source_object_index, cutout.category, blended.box, scale,
          blended.method};
}

// Uniform top-left corner for a w x h patch fully inside the image.
std::pair<int, int> uniform_origin(int w, int h, int image_w, int image_h, Rng& rng) {
  const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(image_w - w) + 1));
  const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(image_h - h) + 1));
  return {x, y};
}

// Pastes `cutout` at a uniformly random location with `scale` clamped so
// that the scaled patch fits.
void paste_uniform(AugmentedRecord& out, const InstanceCutout& cutout, double scale,
                   const BlendMethod& method, Rng& rng) {
  const int iw = out.image.width(), ih = out.image.height();
  const double fit = std::min(static_cast<double>(iw) / cutout.width(),
                              static_cast<double>(ih) / cutout.height());
  scale = std::min(scale, fit);
  ScaledCutout patch = scale_cutout(cutout, scale);
  while (patch.rgb.width() > iw || patch.rgb.height() > ih) {
    scale = std::nextafter(scale, 0.0) * 0.999;
    patch = scale_cutout(cutout, scale);
  }
  const auto [x, y] = uniform_origin(patch.rgb.width(), patch.rgb.height(), iw, ih, rng);
  BlendResult blended = blend_at(out.image, patch, x, y, method, rng);
  out.image = std::move(blended.image);
  out.annotation.objects.push_back({cutout.category, blended.box, false});
  out.provenance.pastes.push_back(paste_record(cutout, blended, scale));
}

}  // namespace

std::vector<Placement> rank_placements(const Image& image, std::span<const BoundingBox> gt,
                                       std::span<const BoundingBox> candidates,
                                       const Scorer& scorer, const AugmentationConfig& cfg,
                                       Rng& rng) {
  const auto target = target_index(scorer, cfg);
  // Neighbourhood draws are taken serially so the result does not depend on
  // the thread count.
  std::vector<NeighbourhoodDraw> draws;
  draws.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    draws.push_back(draw_neighbourhood(cfg.context, rng));
  }
  const std::size_t k = scorer.num_outputs();
  std::vector<std::optional<Placement>> scored(candidates.size());
  parallel_for(static_cast<std::ptrdiff_t>(candidates.size()), [&](std::ptrdiff_t i) {
    const BoundingBox& box = candidates[i];
    if (max_iou(box, gt) > cfg.gt_overlap_max) return;
    const BoundingBox hood = neighbourhood_of(box, draws[i], image.width(), image.height());
    const ContextualSample sample =
        make_context(image, box, hood, cfg.context, static_cast<int>(k - 1));
    const ScoreVector sv = scorer.score(sample);
    std::size_t cls;
    double p;
    if (target) {
      cls = *target;
      p = sv.probs[cls];
    } else {
      std::tie(cls, p) = sv.best_object();
    }
    if (p > cfg.score_threshold) scored[i] = Placement{box, cls, p};
  });
  std::vector<Placement> out;
  for (auto& s : scored) {
    if (s) out.push_back(*s);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Placement& a, const Placement& b) { return a.score > b.score; });
  return out;
}

std::vector<Placement> greedy_select(std::span<const Placement> ranked, double max_overlap,
                                     int max_instances) {
  std::vector<Placement> chosen;
  std::vector<BoundingBox> boxes;
  for (const Placement& p : ranked) {
    if (static_cast<int>(chosen.size()) >= max_instances) break;
    if (max_iou(p.box, boxes) > max_overlap) continue;
    chosen.push_back(p);
    boxes.push_back(p.box);
  }
  return chosen;
}

std::vector<Placement> select_placements(const Image& image, std::span<const BoundingBox> gt,
                                         const Scorer& scorer, const ShapeHistogram& hist,
                                         const AugmentationConfig& cfg, Rng& rng) {
  const auto candidates =
      propose_candidates(image.width(), image.height(), hist, cfg.candidates_per_image, rng);
  const auto ranked = rank_placements(image, gt, candidates, scorer, cfg, rng);
  return greedy_select(ranked, cfg.gt_overlap_max, cfg.max_instances);
}

AugmentedRecord augment_image(const DatasetRecord& record, const AugmentContext& ctx,
                              const AugmentationConfig& cfg, Rng& rng, AugmentMode mode) {
  cfg.validate();
  if (mode != AugmentMode::kContext && mode != AugmentMode::kRandom) {
    throw ValidationError("augment_image handles context and random modes only");
  }
  if (ctx.bank == nullptr) throw ValidationError("an instance bank is required");
  if (mode == AugmentMode::kContext && (ctx.scorer == nullptr || ctx.hist == nullptr)) {
    throw ValidationError("context mode needs a scorer and a shape histogram");
  }
  const InstanceBank& bank = *ctx.bank;
  if (cfg.category && !bank.has_category(*cfg.category)) {
    throw ValidationError("instance bank has no '" + *cfg.category + "' instances");
  }
  AugmentedRecord out = unchanged(record, cfg, mode);
  if (cfg.category && record.annotation.has_category(*cfg.category)) return out;
  if (!rng.bernoulli(cfg.paste_probability)) return out;

  const int iw = record.image.width(), ih = record.image.height();
  if (mode == AugmentMode::kRandom) {
    const auto cats = bank.categories();
    if (cats.empty()) throw ValidationError("instance bank is empty");
    const int count = 1 + static_cast<int>(rng.below(cfg.max_instances));
    for (int i = 0; i < count; ++i) {
      const std::string cat = cfg.category ? *cfg.category : cats[rng.below(cats.size())];
      const auto idx = bank.indices_of(cat);
      const InstanceCutout& cutout = bank.entries()[idx[rng.below(idx.size())]];
      const double scale = rng.uniform(cfg.random_scale_lo, cfg.random_scale_hi);
      paste_uniform(out, cutout, scale, cfg.blend, rng);
    }
    return out;
  }

  const auto gt = record.annotation.boxes();
  const auto candidates =
      propose_candidates(iw, ih, *ctx.hist, cfg.candidates_per_image, rng);
  const auto ranked = rank_placements(record.image, gt, candidates, *ctx.scorer, cfg, rng);
  const auto& names = ctx.scorer->class_names();
  std::vector<BoundingBox> placed;
  int attempts = 0;
  for (const Placement& p : ranked) {
    if (static_cast<int>(placed.size()) >= cfg.max_instances) break;
    if (attempts >= cfg.max_instances * 3) break;
    if (max_iou(p.box, placed) > cfg.gt_overlap_max) continue;
    ++attempts;
    const std::string& cat = names[p.category];
    if (!bank.has_category(cat)) continue;
    const MatchQuery q{p.box, cfg.match_scale_lo, cfg.match_scale_hi, cfg.min_area_fraction};
    const auto match = match_instance(bank, q, cat, rng);
    if (!match) continue;
    const InstanceCutout& cutout = bank.entries()[match->index];
    BlendResult blended = blend(out.image, cutout, p.box, match->scale, cfg.blend, rng);
    out.image = std::move(blended.image);
    out.annotation.objects.push_back({cat, blended.box, false});
    out.provenance.pastes.push_back(paste_record(cutout, blended, match->scale));
    placed.push_back(p.box);
  }
  return out;
}

BoundingBox enlarged_box(const BoundingBox& box, double factor, int image_w, int image_h) {
  if (!(factor > 0)) throw ValidationError("enlarge factor must be positive");
  const double hw = 0.5 * box.width() * factor, hh = 0.5 * box.height() * factor;
  const double x0 = std::max(0.0, std::floor(box.center_x() - hw));
  const double y0 = std::max(0.0, std::floor(box.center_y() - hh));
  const double x1 = std::min<double>(image_w, std::ceil(box.center_x() + hw));
  const double y1 = std::min<double>(image_h, std::ceil(box.center_y() + hh));
  return BoundingBox(x0, y0, x1, y1);
}

AugmentedRecord enlarge_reblend(const DatasetRecord& record, const AugmentationConfig& cfg,
                                Rng& rng) {
  cfg.validate();
  if (!record.masks) {
    throw ValidationError("enlarge mode needs instance masks for image '" +
                          record.annotation.image_id + "'");
  }
  const auto& ann = record.annotation;
  // Cutouts come from the untouched image so later pastes do not pick up
  // earlier ones.
  std::vector<InstanceCutout> cutouts;
  for (std::size_t k = 0; k < ann.objects.size(); ++k) {
    cutouts.push_back(extract_instance(record.image, record.masks->masks[k],
                                       ann.objects[k].category, ann.image_id,
                                       static_cast<int>(k)));
  }
  AugmentedRecord out = unchanged(record, cfg, AugmentMode::kEnlarge);
  for (std::size_t k = 0; k < cutouts.size(); ++k) {
    const InstanceCutout& cutout = cutouts[k];
    const double factor = rng.uniform(cfg.enlarge_lo, cfg.enlarge_hi);
    const ScaledCutout patch = scale_cutout(cutout, factor);
    const int x = static_cast<int>(
        std::lround(cutout.tight_box.center_x() - 0.5 * patch.rgb.width()));
    const int y = static_cast<int>(
        std::lround(cutout.tight_box.center_y() - 0.5 * patch.rgb.height()));
    BlendResult blended = blend_at(out.image, patch, x, y, cfg.blend, rng);
    out.image = std::move(blended.image);
    const BoundingBox box = enlarged_box(ann.objects[k].box, factor, ann.width, ann.height);
    out.annotation.objects[k].box = box;
    PasteRecord rec = paste_record(cutout, blended, factor);
    rec.box = box;
    out.provenance.pastes.push_back(std::move(rec));
  }
  return out;
}

std::vector<AugmentedRecord> remove_context_transform(const Dataset& dataset,
                                                      const std::string& category,
                                                      const InstanceBank& bank,
                                                      const AugmentationConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<const DatasetRecord*> negatives;
  std::vector<InstanceCutout> instances;
  for (const DatasetRecord& rec : dataset) {
    const auto& ann = rec.annotation;
    if (!ann.has_category(category)) {
      negatives.push_back(&rec);
      continue;
    }
    for (std::size_t k = 0; k < ann.objects.size(); ++k) {
      if (ann.objects[k].category != category) continue;
      if (rec.masks) {
        instances.push_back(extract_instance(rec.image, rec.masks->masks[k], category,
                                             ann.image_id, static_cast<int>(k)));
        continue;
      }
      const auto it = std::find_if(bank.entries().begin(), bank.entries().end(),
                                   [&](const InstanceCutout& c) {
                                     return c.source_image_id == ann.image_id &&
                                            c.source_object_index == static_cast<int>(k);
                                   });
      if (it == bank.entries().end()) {
        throw ValidationError("no cutout for object " + std::to_string(k) + " of image '" +
                              ann.image_id + "'");
      }
      instances.push_back(*it);
    }
  }
  if (instances.empty()) throw ValidationError("no image contains '" + category + "'");
  if (instances.size() > negatives.size()) {
    throw ValidationError("not enough background images: " + std::to_string(instances.size()) +
                          " instances, " + std::to_string(negatives.size()) + " images");
  }
  std::vector<std::size_t> order(negatives.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());
  std::vector<AugmentedRecord> out;
  out.reserve(negatives.size());
  for (const DatasetRecord* rec : negatives) {
    out.push_back(unchanged(*rec, cfg, AugmentMode::kRemoveContext));
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    paste_uniform(out[order[i]], instances[i], 1.0, cfg.blend, rng);
  }
  return out;
}

std::vector<AugmentedRecord> augment_dataset(const Dataset& dataset, const AugmentContext& ctx,
                                             const AugmentationConfig& cfg, AugmentMode mode,
                                             int jobs) {
  cfg.validate();
  if (mode == AugmentMode::kRemoveContext) {
    if (!cfg.category) throw ValidationError("remove-context mode needs a category");
    if (ctx.bank == nullptr) throw ValidationError("an instance bank is required");
    Rng rng(cfg.seed);
    return remove_context_transform(dataset, *cfg.category, *ctx.bank, cfg, rng);
  }
  std::vector<std::optional<AugmentedRecord>> slots(dataset.size());
  parallel_for(
      static_cast<std::ptrdiff_t>(dataset.size()),
      [&](std::ptrdiff_t i) {
        const DatasetRecord& rec = dataset[i];
        Rng rng(derive_seed(cfg.seed, rec.annotation.image_id));
        slots[i] = mode == AugmentMode::kEnlarge ? enlarge_reblend(rec, cfg, rng)
                                                 : augment_image(rec, ctx, cfg, rng, mode);
      },
      jobs);
  std::vector<AugmentedRecord> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace ctxaug
