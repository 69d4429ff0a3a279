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

#include "ctxaug/synth_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ctxaug/context_sampler.hpp"
#include "ctxaug/error.hpp"
#include "ctxaug/instance_bank.hpp"

namespace ctxaug {

namespace {

nlohmann::json rgb_json(const Rgb& c) { return {c.r, c.g, c.b}; }

int band_top(const SynthCategory& c, int size) {
  return static_cast<int>(std::ceil(c.y_lo * size));
}
int band_bottom(const SynthCategory& c, int size) {
  return static_cast<int>(std::floor(c.y_hi * size));
}

int patch_side(const SynthSpec& spec, int object_side) {
  return static_cast<int>(std::ceil(spec.patch_factor * object_side));
}

struct Patch {
  int x, y, side;
};

bool overlaps(const Patch& a, const Patch& b) {
  return a.x < b.x + b.side && b.x < a.x + a.side && a.y < b.y + b.side && b.y < a.y + a.side;
}

Image render_background(const SynthSpec& spec, Rng& rng) {
  const int n = spec.image_size;
  const int bands = static_cast<int>(spec.band_colors.size());
  Image img(n, n, 3);
  for (int y = 0; y < n; ++y) {
    const Rgb& c = spec.band_colors[std::min(bands - 1, y * bands / n)];
    for (int x = 0; x < n; ++x) {
      const double noise = rng.uniform(-spec.texture_amplitude, spec.texture_amplitude);
      img.at(x, y, 0) = to_u8(c.r + noise);
      img.at(x, y, 1) = to_u8(c.g + noise);
      img.at(x, y, 2) = to_u8(c.b + noise);
    }
  }
  return img;
}

void fill_patch(Image& img, const Patch& p, const Rgb& c) {
  for (int y = p.y; y < p.y + p.side; ++y) {
    for (int x = p.x; x < p.x + p.side; ++x) {
      img.at(x, y, 0) = c.r;
      img.at(x, y, 1) = c.g;
      img.at(x, y, 2) = c.b;
    }
  }
}

DatasetRecord generate_scene(const SynthSpec& spec, const std::string& id, bool heldout,
                             Rng& rng) {
  const int n = spec.image_size;
  DatasetRecord rec{ImageAnnotation{id, n, n, {}}, render_background(spec, rng),
                    InstanceMaskSet{}};
  std::vector<Patch> patches;
  for (int i = 0; i < spec.instances_per_image; ++i) {
    const std::size_t ci = rng.below(spec.categories.size());
    const SynthCategory& cat = spec.categories[ci];
    const int w = spec.object_min + static_cast<int>(rng.below(spec.object_max - spec.object_min + 1));
    const int h = spec.object_min + static_cast<int>(rng.below(spec.object_max - spec.object_min + 1));
    const int side = patch_side(spec, std::max(w, h));
    const int top = band_top(cat, n), bottom = band_bottom(cat, n) - side;
    std::optional<Patch> placed;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      const Patch p{static_cast<int>(rng.below(n - side + 1)),
                    top + static_cast<int>(rng.below(bottom - top + 1)), side};
      if (std::none_of(patches.begin(), patches.end(),
                       [&](const Patch& q) { return overlaps(p, q); })) {
        placed = p;
      }
    }
    if (!placed) continue;  // scene too full; fewer instances
    patches.push_back(*placed);
    fill_patch(rec.image, *placed, cat.habitat);
    if (heldout) continue;

    const int ox = placed->x + (side - w) / 2, oy = placed->y + (side - h) / 2;
    Mask mask(n, n, 0);
    const double rx = 0.5 * w, ry = 0.5 * h;
    for (int y = oy; y < oy + h; ++y) {
      for (int x = ox; x < ox + w; ++x) {
        const double dx = (x + 0.5 - ox - rx) / rx, dy = (y + 0.5 - oy - ry) / ry;
        if (cat.shape == SynthShape::kEllipse && dx * dx + dy * dy > 1.0) continue;
        mask.at(x, y) = 1;
        rec.image.at(x, y, 0) = cat.color.r;
        rec.image.at(x, y, 1) = cat.color.g;
        rec.image.at(x, y, 2) = cat.color.b;
      }
    }
    int x0 = n, y0 = n, x1 = -1, y1 = -1;
    for (int y = oy; y < oy + h; ++y) {
      for (int x = ox; x < ox + w; ++x) {
        if (!mask.at(x, y)) continue;
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
    rec.annotation.objects.push_back({cat.name, BoundingBox(x0, y0, x1 + 1, y1 + 1), false});
    rec.masks->masks.push_back(std::move(mask));
  }
  return rec;
}

bool satisfies(const SynthCategory& c, const BoundingBox& box, int size) {
  const double cy = box.center_y();
  return cy >= c.y_lo * size && cy < c.y_hi * size;
}

}  // namespace

void SynthSpec::validate() const {
  if (image_size < 16 || n_images < 1 || n_heldout < 1 || instances_per_image < 1) {
    throw ValidationError("synthetic spec sizes must be positive");
  }
  if (object_min < 2 || object_max < object_min || !(patch_factor >= 1.0)) {
    throw ValidationError("synthetic object sizes must satisfy 2 <= min <= max");
  }
  if (band_colors.empty() || categories.empty()) {
    throw ValidationError("synthetic spec needs bands and categories");
  }
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const SynthCategory& c = categories[i];
    if (!(c.y_lo >= 0 && c.y_hi <= 1 && c.y_lo < c.y_hi)) {
      throw ValidationError("category '" + c.name + "' has an invalid band");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const SynthCategory& o = categories[j];
      if (c.name == o.name) throw ValidationError("duplicate category '" + c.name + "'");
      if (c.y_lo < o.y_hi && o.y_lo < c.y_hi) {
        throw ValidationError("bands of '" + o.name + "' and '" + c.name + "' overlap");
      }
    }
    const int side = patch_side(*this, object_max);
    if (band_bottom(c, image_size) - band_top(c, image_size) < side || side > image_size) {
      throw ValidationError("band of '" + c.name + "' is too small for a " +
                            std::to_string(side) + " px patch");
    }
  }
}

nlohmann::json SynthSpec::to_json() const {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : categories) {
    cats.push_back({{"name", c.name},
                    {"y_lo", c.y_lo},
                    {"y_hi", c.y_hi},
                    {"color", rgb_json(c.color)},
                    {"shape", c.shape == SynthShape::kEllipse ? "ellipse" : "rectangle"},
                    {"habitat", rgb_json(c.habitat)}});
  }
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : band_colors) bands.push_back(rgb_json(b));
  return {{"image_size", image_size},
          {"n_images", n_images},
          {"n_heldout", n_heldout},
          {"instances_per_image", instances_per_image},
          {"object_min", object_min},
          {"object_max", object_max},
          {"patch_factor", patch_factor},
          {"texture_amplitude", texture_amplitude},
          {"band_colors", bands},
          {"categories", cats},
          {"seed", seed}};
}

std::string SynthSpec::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset generate_synthetic_dataset(const SynthSpec& spec, Rng& rng, bool heldout) {
  spec.validate();
  const int count = heldout ? spec.n_heldout : spec.n_images;
  const std::string prefix = heldout ? "heldout_" : "train_";
  std::vector<std::pair<std::string, std::uint64_t>> jobs;
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "%s%04d", prefix.c_str(), i);
    jobs.emplace_back(id, rng.next_u64());
  }
  Dataset out(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(jobs.size()); ++i) {
    Rng local(jobs[i].second);
    out[i] = generate_scene(spec, jobs[i].first, heldout, local);
  }
  return out;
}

double rule_consistency(std::span<const ObjectAnnotation> placements, const SynthSpec& spec) {
  if (placements.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& p : placements) {
    const auto it = std::find_if(spec.categories.begin(), spec.categories.end(),
                                 [&](const SynthCategory& c) { return c.name == p.category; });
    if (it == spec.categories.end()) {
      throw ValidationError("unknown category '" + p.category + "'");
    }
    if (satisfies(*it, p.box, spec.image_size)) ++ok;
  }
  return static_cast<double>(ok) / placements.size();
}

double chance_consistency(const SynthSpec& spec) {
  double sum = 0.0;
  for (const auto& c : spec.categories) sum += c.y_hi - c.y_lo;
  return sum / spec.categories.size();
}

nlohmann::json BenchmarkReport::to_json() const {
  return {{"context_consistency", context_consistency},
          {"random_consistency", random_consistency},
          {"scorer_val_accuracy", scorer_val_accuracy},
          {"chance", chance},
          {"context_placements", context_placements},
          {"random_placements", random_placements},
          {"seed", seed},
          {"spec_hash", spec_hash}};
}

BenchmarkReport BenchmarkReport::from_json(const nlohmann::json& j) {
  auto number = [&](const char* key) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) {
      throw SchemaError(std::string("report field '") + key + "' missing or not a number");
    }
    return j.at(key);
  };
  BenchmarkReport r;
  r.context_consistency = number("context_consistency").get<double>();
  r.random_consistency = number("random_consistency").get<double>();
  r.scorer_val_accuracy = number("scorer_val_accuracy").get<double>();
  r.chance = number("chance").get<double>();
  r.context_placements = number("context_placements").get<std::size_t>();
  r.random_placements = number("random_placements").get<std::size_t>();
  r.seed = number("seed").get<std::uint64_t>();
  if (!j.contains("spec_hash") || !j.at("spec_hash").is_string()) {
    throw SchemaError("report field 'spec_hash' missing or not a string");
  }
  r.spec_hash = j.at("spec_hash").get<std::string>();
  for (double v : {r.context_consistency, r.random_consistency, r.scorer_val_accuracy, r.chance}) {
    if (!(v >= 0.0 && v <= 1.0)) throw SchemaError("report fractions must lie in [0, 1]");
  }
  return r;
}

BenchmarkReport run_benchmark(const SynthSpec& spec, const BenchmarkConfig& cfg) {
  spec.validate();
  Rng train_rng(derive_seed(spec.seed, "train-scenes"));
  Rng held_rng(derive_seed(spec.seed, "heldout-scenes"));
  const Dataset train = generate_synthetic_dataset(spec, train_rng, false);
  const Dataset held = generate_synthetic_dataset(spec, held_rng, true);

  std::vector<std::string> names;
  for (const auto& c : spec.categories) names.push_back(c.name);

  FeatureSet features;
  features.dim = static_cast<std::size_t>(cfg.feature_size) * cfg.feature_size * 3;
  for_each_context(train, names, cfg.augment.context, derive_seed(spec.seed, "contexts"),
                   [&](ContextualSample&& s) {
                     features.append(context_features(s.pixels, cfg.feature_size), s.label);
                   });
  TrainParams tp = cfg.train;
  tp.seed = derive_seed(spec.seed, "scorer");
  TrainReport tr;
  const BuiltinScorer scorer = train_builtin(features, names, tp, &tr, cfg.feature_size,
                                             cfg.augment.context.out_size);

  const InstanceBank bank = build_bank(train);
  const ShapeHistogram hist = dataset_shape_histogram(train);
  AugmentationConfig acfg = cfg.augment;
  acfg.paste_probability = 1.0;
  acfg.category.reset();
  const AugmentContext ctx{&bank, &scorer, &hist};

  auto placements = [&](AugmentMode mode, std::uint64_t seed, std::vector<ObjectAnnotation>& out) {
    acfg.seed = seed;
    for (const auto& rec : augment_dataset(held, ctx, acfg, mode, cfg.jobs)) {
      for (const auto& p : rec.provenance.pastes) out.push_back({p.category, p.box, false});
    }
  };
  std::vector<ObjectAnnotation> context, random;
  placements(AugmentMode::kContext, derive_seed(spec.seed, "augment"), context);
  for (int pass = 0; pass < std::max(1, cfg.random_passes); ++pass) {
    placements(AugmentMode::kRandom, derive_seed(spec.seed, "random" + std::to_string(pass)),
               random);
  }

  BenchmarkReport r;
  r.context_consistency = rule_consistency(context, spec);
  r.random_consistency = rule_consistency(random, spec);
  r.scorer_val_accuracy = tr.val_accuracy;
  r.chance = chance_consistency(spec);
  r.context_placements = context.size();
  r.random_placements = random.size();
  r.seed = spec.seed;
  r.spec_hash = spec.hash();
  return r;
}

}  // namespace ctxaug
