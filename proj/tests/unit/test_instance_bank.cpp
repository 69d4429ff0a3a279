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
#include <cmath>
#include <map>

#include "ctxaug/error.hpp"
#include "ctxaug/instance_bank.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace ctxaug;

namespace {

InstanceCutout solid(int w, int h, std::string cat = "dog", int index = 0) {
  Image img(w, h, 3, 90);
  Mask m(w, h, 1);
  return extract_instance(img, m, std::move(cat), "src", index);
}

MatchQuery query(double cw, double ch) { return MatchQuery{BoundingBox(0, 0, cw, ch)}; }

}  // namespace

TEST_CASE("extract block, full and L-shaped instances") {
  Image img(8, 6, 3);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<std::uint8_t>(i);
  Mask block(8, 6, 0);
  block.at(3, 2) = block.at(4, 2) = block.at(3, 3) = block.at(4, 3) = 1;
  const InstanceCutout b = extract_instance(img, block, "a", "img", 1);
  CHECK(b.width() == 2);
  CHECK(b.height() == 2);
  CHECK(count_set(b.mask()) == 4);
  CHECK(b.tight_box == BoundingBox(3, 2, 5, 4));
  CHECK(b.rgba.at(1, 1, 0) == img.at(4, 3, 0));

  const InstanceCutout full = extract_instance(img, Mask(8, 6, 1), "a", "img", 0);
  CHECK(full.tight_box == BoundingBox(0, 0, 8, 6));
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) {
      CHECK(full.rgba.at(x, y, 3) == 255);
      for (int c = 0; c < 3; ++c) CHECK(full.rgba.at(x, y, c) == img.at(x, y, c));
    }
  }

  Mask ell(8, 6, 0);
  for (int y = 1; y < 5; ++y) ell.at(2, y) = 1;
  for (int x = 2; x < 6; ++x) ell.at(x, 4) = 1;
  const InstanceCutout l = extract_instance(img, ell, "a", "img", 2);
  CHECK(l.tight_box == BoundingBox(2, 1, 6, 5));
  CHECK(count_set(l.mask()) == count_set(ell));
  CHECK(count_set(l.mask()) == 7);

  CHECK_THROWS_AS(extract_instance(img, Mask(8, 6, 0), "a", "img", 0), ValidationError);
}

TEST_CASE("feasible scale interval examples") {
  const auto iv = feasible_scale_interval(60, 60, query(100, 100));
  REQUIRE(iv);
  CHECK(iv->lo == doctest::Approx(std::sqrt(0.8) * 100 / 60).epsilon(1e-12));
  CHECK(std::abs(iv->lo - 1.4907) <= 1e-3);
  CHECK(iv->hi == 1.5);
  // The endpoints satisfy the constraints; stepping past them violates one.
  CHECK(oracle::scale_feasible(iv->lo, 60, 60, 100, 100, 0.8));
  CHECK_FALSE(oracle::scale_feasible(std::nextafter(iv->lo, 0.0) - 1e-9, 60, 60, 100, 100, 0.8));

  CHECK_FALSE(feasible_scale_interval(60, 30, query(100, 100)));

  // Equal sizes: the exact fit s = 1 is the upper end; the area constraint
  // alone sets the lower end at sqrt(0.8).
  const auto exact = feasible_scale_interval(100, 100, query(100, 100));
  REQUIRE(exact);
  CHECK(exact->hi == 1.0);
  CHECK(exact->lo == doctest::Approx(std::sqrt(0.8)).epsilon(1e-12));
  CHECK(oracle::scale_feasible(0.9, 100, 100, 100, 100, 0.8));
}

TEST_CASE("feasible scale interval agrees with a scale grid") {
  Rng rng(17);
  int disagreements = 0, feasible_pairs = 0;
  for (int t = 0; t < 300; ++t) {
    const double w = rng.uniform(5, 120), h = rng.uniform(5, 120);
    const double cw = rng.uniform(8, 120), ch = rng.uniform(8, 120);
    const auto iv = feasible_scale_interval(w, h, query(cw, ch));
    feasible_pairs += iv.has_value();
    for (int i = 0; i <= 1000; ++i) {
      const double s = 0.5 + i * 0.001;
      const bool grid = oracle::scale_feasible(s, w, h, cw, ch, 0.8);
      const bool ours = iv && s >= iv->lo && s <= iv->hi;
      disagreements += grid != ours;
    }
  }
  CHECK(disagreements == 0);
  CHECK(feasible_pairs > 20);
}

TEST_CASE("match_instance") {
  InstanceBank bank;
  bank.add(solid(60, 30));  // infeasible for a 100x100 candidate
  bank.add(solid(70, 70));
  bank.add(solid(10, 10, "cat"));
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto m = match_instance(bank, query(100, 100), "dog", rng);
    REQUIRE(m);
    CHECK(m->index == 1);
    const auto iv = feasible_scale_interval(bank.entries()[1], query(100, 100));
    CHECK(m->scale >= iv->lo);
    CHECK(m->scale <= iv->hi);
    CHECK(oracle::scale_feasible(m->scale, 70, 70, 100, 100, 0.8));
  }
  CHECK_FALSE(match_instance(bank, query(100, 100), "cat", rng));
  CHECK_THROWS_AS(match_instance(bank, query(100, 100), "horse", rng), ValidationError);
}

TEST_CASE("match_instance is uniform over feasible instances") {
  InstanceBank bank;
  bank.add(solid(80, 80, "dog", 0));
  bank.add(solid(50, 20, "dog", 1));  // infeasible
  bank.add(solid(90, 85, "dog", 2));
  bank.add(solid(75, 78, "dog", 3));
  Rng rng(99);
  std::map<std::size_t, int> hits;
  const int n = 3000;
  for (int i = 0; i < n; ++i) ++hits[match_instance(bank, query(100, 100), "dog", rng)->index];
  CHECK(hits.count(1) == 0);
  for (std::size_t k : {0u, 2u, 3u}) {
    CHECK(std::abs(static_cast<double>(hits[k]) / n - 1.0 / 3.0) <= 0.05);
  }
}

TEST_CASE("bank build, save and load") {
  ctxaug::testing::TempDir dir;
  Dataset ds = ctxaug::testing::fixture_dataset(3);
  ds[0].annotation.objects[0].difficult = true;
  const InstanceBank bank = build_bank(ds);
  std::size_t objects = 0;
  for (const auto& r : ds) objects += r.annotation.objects.size();
  CHECK(bank.size() == objects - 1);
  for (const auto& e : bank.entries()) {
    const auto& rec = *std::find_if(ds.begin(), ds.end(), [&](const DatasetRecord& r) {
      return r.annotation.image_id == e.source_image_id;
    });
    CHECK(e.category == rec.annotation.objects[e.source_object_index].category);
    CHECK(rec.annotation.objects[e.source_object_index].box.contains(e.tight_box));
  }
  bank.save(dir.path());
  const InstanceBank back = InstanceBank::load(dir.path());
  REQUIRE(back.size() == bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    CHECK(back.entries()[i].rgba == bank.entries()[i].rgba);
    CHECK(back.entries()[i].tight_box == bank.entries()[i].tight_box);
    CHECK(back.entries()[i].source_image_id == bank.entries()[i].source_image_id);
    CHECK(back.entries()[i].source_object_index == bank.entries()[i].source_object_index);
  }
  CHECK(back.categories() == bank.categories());
  CHECK_THROWS_AS(InstanceBank::load(dir / "nope"), IoError);
}
