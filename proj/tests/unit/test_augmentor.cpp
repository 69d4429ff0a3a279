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

#include <doctest.h>

#include <algorithm>
#include <map>

#include "ctxaug/augmentor.hpp"
#include "ctxaug/error.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace ctxaug;
using ctxaug::testing::StubScorer;
using ctxaug::testing::fixture_dataset;

namespace {

// Dog probability rises with the mean red value of the unmasked context.
class RedScorer : public Scorer {
 public:
  const std::vector<std::string>& class_names() const override { return names_; }
  ScoreVector score(const ContextualSample& s) const override {
    double sum = 0.0;
    for (int y = 0; y < s.pixels.height(); ++y) {
      for (int x = 0; x < s.pixels.width(); ++x) sum += s.pixels.at(x, y, 0);
    }
    const double p = sum / (255.0 * s.pixels.width() * s.pixels.height());
    return {{p, 0.5 * (1 - p), 0.5 * (1 - p)}};
  }

 private:
  std::vector<std::string> names_{"dog", "cat"};
};

Image gradient_image(int w, int h) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<std::uint8_t>(255 * x / (w - 1));
      img.at(x, y, 1) = static_cast<std::uint8_t>(255 * y / (h - 1));
      img.at(x, y, 2) = 60;
    }
  }
  return img;
}

ShapeHistogram fixture_histogram() { return dataset_shape_histogram(fixture_dataset()); }

AugmentationConfig base_config() {
  AugmentationConfig cfg;
  cfg.paste_probability = 1.0;
  cfg.blend = BlendNone{};
  return cfg;
}

// Keeps only objects (and masks) whose category passes `keep`.
DatasetRecord filter_objects(const DatasetRecord& rec, const std::string& category, bool keep) {
  DatasetRecord out = rec;
  out.annotation.objects.clear();
  out.masks = InstanceMaskSet{};
  for (std::size_t k = 0; k < rec.annotation.objects.size(); ++k) {
    if ((rec.annotation.objects[k].category == category) != keep) continue;
    out.annotation.objects.push_back(rec.annotation.objects[k]);
    out.masks->masks.push_back(rec.masks->masks[k]);
  }
  return out;
}

// Bounding box of pixels that differ between two images.
std::optional<BoundingBox> changed_box(const Image& a, const Image& b) {
  int x0 = a.width(), y0 = a.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      bool diff = false;
      for (int c = 0; c < 3; ++c) diff |= a.at(x, y, c) != b.at(x, y, c);
      if (!diff) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return BoundingBox(x0, y0, x1 + 1, y1 + 1);
}

}  // namespace

TEST_CASE("mode names") {
  for (const char* m : {"context", "random", "enlarge", "remove-context"}) {
    CHECK(mode_name(parse_mode(m)) == m);
  }
  CHECK_THROWS_AS(parse_mode("mixup"), ValidationError);
  AugmentationConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.paste_probability = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = AugmentationConfig{};
  cfg.max_instances = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = AugmentationConfig{};
  cfg.random_scale_lo = 3.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("candidate proposals") {
  const ShapeHistogram hist = fixture_histogram();
  Rng a(5), b(5);
  const auto c1 = propose_candidates(96, 96, hist, 200, a);
  const auto c2 = propose_candidates(96, 96, hist, 200, b);
  REQUIRE(c1.size() == 200);
  CHECK(c1 == c2);
  for (const auto& box : c1) {
    CHECK(box.x0() >= 0);
    CHECK(box.y0() >= 0);
    CHECK(box.x1() <= 96);
    CHECK(box.y1() <= 96);
    CHECK(box.width() >= 8);
    CHECK(box.height() >= 8);
  }
  Rng c(1);
  CHECK_THROWS_AS(propose_candidates(96, 96, hist, 0, c), ValidationError);
  CHECK_THROWS_AS(propose_candidates(4, 4, hist, 10, c), ValidationError);
}

TEST_CASE("ranking matches an independent filter and greedy selection") {
  const Image image = gradient_image(120, 90);
  const std::vector<BoundingBox> gt{BoundingBox(80, 10, 110, 40)};
  const RedScorer scorer;
  AugmentationConfig cfg = base_config();
  cfg.score_threshold = 0.55;
  const ShapeHistogram hist = fixture_histogram();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto candidates = propose_candidates(120, 90, hist, 200, rng);
    Rng rank_rng = rng;
    const auto ranked = rank_placements(image, gt, candidates, scorer, cfg, rank_rng);

    // Oracle: same neighbourhood draws, direct scoring, explicit filter.
    std::vector<std::pair<double, std::size_t>> kept;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto draw = draw_neighbourhood(cfg.context, rng);
      const int g[4] = {80, 10, 110, 40};
      const auto& b = candidates[i];
      const double iou = oracle::box_iou(b.x0(), b.y0(), b.x1(), b.y1(), g[0], g[1], g[2], g[3]);
      if (iou > 0.3) continue;
      const auto hood = neighbourhood_of(b, draw, 120, 90);
      const double p = scorer.score(make_context(image, b, hood, cfg.context, 2)).probs[0];
      if (p > 0.55) kept.emplace_back(p, i);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    REQUIRE(ranked.size() == kept.size());
    CHECK(!kept.empty());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      CHECK(ranked[i].box == candidates[kept[i].second]);
      CHECK(ranked[i].score == kept[i].first);
      CHECK(ranked[i].category == 0);
    }

    std::vector<BoundingBox> chosen;
    for (const auto& [p, i] : kept) {
      if (chosen.size() == 2) break;
      bool ok = true;
      for (const auto& c : chosen) {
        const auto& b = candidates[i];
        ok &= oracle::box_iou(b.x0(), b.y0(), b.x1(), b.y1(), c.x0(), c.y0(), c.x1(), c.y1()) <= 0.3;
      }
      if (ok) chosen.push_back(candidates[i]);
    }
    const auto selected = greedy_select(ranked, 0.3, 2);
    REQUIRE(selected.size() == chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) CHECK(selected[i].box == chosen[i]);
  }
}

TEST_CASE("score threshold is strict") {
  const Image image = gradient_image(96, 96);
  const ShapeHistogram hist = fixture_histogram();
  const AugmentationConfig cfg = base_config();
  {
    const StubScorer at(std::vector<std::string>{"dog", "cat"}, {0.8, 0.1, 0.1});
    Rng rng(3);
    CHECK(select_placements(image, {}, at, hist, cfg, rng).empty());
    CHECK(at.calls == 200);
  }
  {
    const StubScorer above(std::vector<std::string>{"dog", "cat"}, {0.8000001, 0.1, 0.0999999});
    Rng rng(3);
    const auto sel = select_placements(image, {}, above, hist, cfg, rng);
    CHECK(sel.size() == 2);
    CHECK(oracle::box_iou(sel[0].box.x0(), sel[0].box.y0(), sel[0].box.x1(), sel[0].box.y1(),
                          sel[1].box.x0(), sel[1].box.y0(), sel[1].box.x1(), sel[1].box.y1()) <= 0.3);
  }
  {
    // Single-category mode reads the named class, not the best one.
    const StubScorer cat(std::vector<std::string>{"dog", "cat"}, {0.9, 0.05, 0.05});
    AugmentationConfig c = cfg;
    c.category = "cat";
    Rng rng(3);
    CHECK(select_placements(image, {}, cat, hist, c, rng).empty());
    c.category = "horse";
    CHECK_THROWS_AS(select_placements(image, {}, cat, hist, c, rng), ValidationError);
  }
}

TEST_CASE("context augmentation contract") {
  const Dataset ds = fixture_dataset();
  const InstanceBank bank = build_bank(ds);
  const ShapeHistogram hist = dataset_shape_histogram(ds);
  const StubScorer scorer(std::vector<std::string>{"A", "B"}, {0.9, 0.05, 0.05});
  const AugmentContext ctx{&bank, &scorer, &hist};
  AugmentationConfig cfg = base_config();
  for (const DatasetRecord& rec : ds) {
    Rng rng(derive_seed(11, rec.annotation.image_id));
    const AugmentedRecord out = augment_image(rec, ctx, cfg, rng, AugmentMode::kContext);
    const auto& pastes = out.provenance.pastes;
    CHECK(pastes.size() == 2);
    CHECK(out.annotation.objects.size() == rec.annotation.objects.size() + pastes.size());
    CHECK(out.provenance.mode == "context");
    const auto gt = rec.annotation.boxes();
    for (std::size_t i = 0; i < pastes.size(); ++i) {
      const auto& p = pastes[i];
      CHECK(p.category == "A");
      CHECK(p.blend == "none");
      CHECK(p.scale >= 0.5);
      CHECK(p.scale <= 1.5);
      CHECK(out.annotation.objects[rec.annotation.objects.size() + i].box == p.box);
      CHECK(p.box.x0() >= 0);
      CHECK(p.box.y0() >= 0);
      CHECK(p.box.x1() <= 96);
      CHECK(p.box.y1() <= 96);
      // Fresh instances must not bury the originals.
      CHECK(max_iou(p.box, gt) <= 0.5);
    }
    CHECK(iou(pastes[0].box, pastes[1].box) <= 0.5);
  }
}

TEST_CASE("pasted box is the tight box of the pasted pixels") {
  const Dataset ds = fixture_dataset();
  const InstanceBank bank = build_bank(ds);
  const ShapeHistogram hist = dataset_shape_histogram(ds);
  const StubScorer scorer(std::vector<std::string>{"A", "B"}, {0.05, 0.9, 0.05});
  const AugmentContext ctx{&bank, &scorer, &hist};
  AugmentationConfig cfg = base_config();
  cfg.max_instances = 1;
  int checked = 0;
  for (const DatasetRecord& rec : ds) {
    for (AugmentMode mode : {AugmentMode::kContext, AugmentMode::kRandom}) {
      Rng rng(derive_seed(4, rec.annotation.image_id));
      const AugmentedRecord out = augment_image(rec, ctx, cfg, rng, mode);
      REQUIRE(out.provenance.pastes.size() == 1);
      const BoundingBox box = out.provenance.pastes[0].box;
      const auto changed = changed_box(rec.image, out.image);
      REQUIRE(changed);
      CHECK(changed->x0() >= box.x0());
      CHECK(changed->y0() >= box.y0());
      CHECK(changed->x1() <= box.x1());
      CHECK(changed->y1() <= box.y1());
      CHECK(changed->x0() - box.x0() <= 1);
      CHECK(changed->y0() - box.y0() <= 1);
      CHECK(box.x1() - changed->x1() <= 1);
      CHECK(box.y1() - changed->y1() <= 1);
      ++checked;
    }
  }
  CHECK(checked == 12);
}

TEST_CASE("paste coin flip and single-category skip") {
  const Dataset ds = fixture_dataset();
  const InstanceBank bank = build_bank(ds);
  const ShapeHistogram hist = dataset_shape_histogram(ds);
  const StubScorer scorer(std::vector<std::string>{"A", "B"}, {0.9, 0.05, 0.05});
  const AugmentContext ctx{&bank, &scorer, &hist};
  AugmentationConfig cfg = base_config();
  cfg.paste_probability = 0.0;
  Rng rng(1);
  const AugmentedRecord same = augment_image(ds[0], ctx, cfg, rng, AugmentMode::kContext);
  CHECK(same.image == ds[0].image);
  CHECK(same.annotation == ds[0].annotation);
  CHECK(same.provenance.pastes.empty());
  CHECK(scorer.calls == 0);

  // Roughly half the images are touched at probability 0.5.
  cfg.paste_probability = 0.5;
  int touched = 0;
  for (int i = 0; i < 400; ++i) {
    Rng r(derive_seed(99, std::to_string(i)));
    touched += !augment_image(ds[0], ctx, cfg, r, AugmentMode::kRandom).provenance.pastes.empty();
  }
  CHECK(touched == doctest::Approx(200).epsilon(0.15));

  cfg.paste_probability = 1.0;
  cfg.category = "A";
  const DatasetRecord with_a = filter_objects(ds[1], "A", true);
  const DatasetRecord without_a = filter_objects(ds[1], "A", false);
  REQUIRE(!with_a.annotation.objects.empty());
  Rng r1(2), r2(2);
  CHECK(augment_image(with_a, ctx, cfg, r1, AugmentMode::kContext).provenance.pastes.empty());
  const auto out = augment_image(without_a, ctx, cfg, r2, AugmentMode::kContext);
  CHECK(!out.provenance.pastes.empty());
  for (const auto& p : out.provenance.pastes) CHECK(p.category == "A");

  cfg.category = "C";
  CHECK_THROWS_AS(augment_image(without_a, ctx, cfg, r2, AugmentMode::kContext), ValidationError);
  CHECK_THROWS_AS(augment_image(ds[0], AugmentContext{&bank, nullptr, nullptr}, base_config(), r2,
                                AugmentMode::kContext),
                  ValidationError);
}

TEST_CASE("random placement") {
  const Dataset ds = fixture_dataset();
  const InstanceBank bank = build_bank(ds);
  const AugmentContext ctx{&bank, nullptr, nullptr};
  const AugmentationConfig cfg = base_config();
  std::map<std::size_t, int> counts;
  std::map<std::string, int> cats;
  for (int i = 0; i < 300; ++i) {
    Rng rng(derive_seed(8, std::to_string(i)));
    const auto out = augment_image(ds[i % ds.size()], ctx, cfg, rng, AugmentMode::kRandom);
    ++counts[out.provenance.pastes.size()];
    for (const auto& p : out.provenance.pastes) {
      ++cats[p.category];
      CHECK(p.scale >= 0.5);
      CHECK(p.scale <= 2.0);
      CHECK(p.box.x1() <= 96);
      CHECK(p.box.y1() <= 96);
    }
  }
  CHECK(counts.size() == 2);
  CHECK(counts[1] == doctest::Approx(150).epsilon(0.2));
  CHECK(counts[2] == doctest::Approx(150).epsilon(0.2));
  CHECK(cats["A"] > 150);
  CHECK(cats["B"] > 150);
}

TEST_CASE("enlarged boxes") {
  CHECK(enlarged_box(BoundingBox(40, 40, 60, 60), 1.25, 100, 100) == BoundingBox(37, 37, 63, 63));
  CHECK(enlarged_box(BoundingBox(0, 0, 10, 10), 1.5, 100, 100) == BoundingBox(0, 0, 13, 13));
  CHECK(enlarged_box(BoundingBox(90, 95, 100, 100), 1.5, 100, 100) == BoundingBox(87, 93, 100, 100));
  CHECK_THROWS_AS(enlarged_box(BoundingBox(0, 0, 1, 1), 0.0, 10, 10), ValidationError);

  const Dataset ds = fixture_dataset();
  AugmentationConfig cfg = base_config();
  for (const DatasetRecord& rec : ds) {
    Rng rng(derive_seed(6, rec.annotation.image_id));
    const AugmentedRecord out = enlarge_reblend(rec, cfg, rng);
    REQUIRE(out.annotation.objects.size() == rec.annotation.objects.size());
    REQUIRE(out.provenance.pastes.size() == rec.annotation.objects.size());
    for (std::size_t k = 0; k < rec.annotation.objects.size(); ++k) {
      const auto& before = rec.annotation.objects[k].box;
      const auto& after = out.annotation.objects[k].box;
      const double f = out.provenance.pastes[k].scale;
      CHECK(f >= 1.2);
      CHECK(f <= 1.5);
      CHECK(after == enlarged_box(before, f, 96, 96));
      CHECK(after.x0() <= before.x0());
      CHECK(after.y0() <= before.y0());
      CHECK(after.x1() >= before.x1());
      CHECK(after.y1() >= before.y1());
      CHECK(out.annotation.objects[k].category == rec.annotation.objects[k].category);
    }
  }
  DatasetRecord no_masks = ds[0];
  no_masks.masks.reset();
  Rng rng(1);
  CHECK_THROWS_AS(enlarge_reblend(no_masks, cfg, rng), ValidationError);
}

TEST_CASE("remove-context transform") {
  // Five images with a single A instance followed by five without A.
  const Dataset full = fixture_dataset(40, 17);
  Dataset pos, neg;
  for (const DatasetRecord& rec : full) {
    DatasetRecord a = filter_objects(rec, "A", true);
    DatasetRecord rest = filter_objects(rec, "A", false);
    if (pos.size() < 5 && !a.annotation.objects.empty()) {
      a.annotation.objects.erase(a.annotation.objects.begin() + 1, a.annotation.objects.end());
      a.masks->masks.erase(a.masks->masks.begin() + 1, a.masks->masks.end());
      pos.push_back(std::move(a));
    } else if (neg.size() < 5 && !rest.annotation.objects.empty()) {
      neg.push_back(std::move(rest));
    }
  }
  REQUIRE(pos.size() == 5);
  REQUIRE(neg.size() == 5);
  Dataset ds = pos;
  ds.insert(ds.end(), neg.begin(), neg.end());
  const InstanceBank bank = build_bank(ds);
  AugmentationConfig cfg = base_config();
  cfg.category = "A";
  const auto out = augment_dataset(ds, AugmentContext{&bank, nullptr, nullptr}, cfg,
                                   AugmentMode::kRemoveContext);
  REQUIRE(out.size() == 5);
  int pasted = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].annotation.image_id == ds[5 + i].annotation.image_id);
    const auto& objs = out[i].annotation.objects;
    const auto& orig = ds[5 + i].annotation.objects;
    REQUIRE(objs.size() >= orig.size());
    for (std::size_t k = 0; k < orig.size(); ++k) CHECK(objs[k] == orig[k]);
    for (std::size_t k = orig.size(); k < objs.size(); ++k) CHECK(objs[k].category == "A");
    pasted += static_cast<int>(objs.size() - orig.size());
    CHECK(out[i].provenance.mode == "remove-context");
    for (const auto& p : out[i].provenance.pastes) CHECK(p.scale == 1.0);
  }
  CHECK(pasted == 5);

  // Without masks the bank supplies the cutouts.
  Dataset bare = ds;
  for (auto& r : bare) r.masks.reset();
  const auto again = augment_dataset(bare, AugmentContext{&bank, nullptr, nullptr}, cfg,
                                     AugmentMode::kRemoveContext);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].image == out[i].image);

  Dataset short_ds(ds.begin(), ds.begin() + 7);
  CHECK_THROWS_AS(augment_dataset(short_ds, AugmentContext{&bank, nullptr, nullptr}, cfg,
                                  AugmentMode::kRemoveContext),
                  ValidationError);
  cfg.category.reset();
  CHECK_THROWS_AS(augment_dataset(ds, AugmentContext{&bank, nullptr, nullptr}, cfg,
                                  AugmentMode::kRemoveContext),
                  ValidationError);
}

TEST_CASE("dataset augmentation is independent of the thread count") {
  const Dataset ds = fixture_dataset(8, 5);
  const InstanceBank bank = build_bank(ds);
  const ShapeHistogram hist = dataset_shape_histogram(ds);
  const StubScorer scorer(std::vector<std::string>{"A", "B"}, {0.3, 0.6, 0.1});
  const AugmentContext ctx{&bank, &scorer, &hist};
  AugmentationConfig cfg;
  cfg.seed = 7;
  for (AugmentMode mode : {AugmentMode::kContext, AugmentMode::kRandom, AugmentMode::kEnlarge}) {
    const auto one = augment_dataset(ds, ctx, cfg, mode, 1);
    const auto four = augment_dataset(ds, ctx, cfg, mode, 4);
    REQUIRE(one.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(one[i].image == four[i].image);
      CHECK(one[i].annotation == four[i].annotation);
      CHECK(one[i].provenance.to_json() == four[i].provenance.to_json());
    }
  }
  cfg.seed = 8;
  const auto other = augment_dataset(ds, ctx, cfg, AugmentMode::kRandom, 2);
  const auto base = augment_dataset(ds, ctx, AugmentationConfig{.seed = 7}, AugmentMode::kRandom, 2);
  bool differs = false;
  for (std::size_t i = 0; i < ds.size(); ++i) differs |= !(other[i].image == base[i].image);
  CHECK(differs);
}
