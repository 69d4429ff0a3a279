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

#include "ctxaug/error.hpp"
#include "ctxaug/png_io.hpp"
#include "ctxaug/scorer.hpp"
#include "test_support.hpp"

using namespace ctxaug;

namespace {

ContextualSample noise_sample(int size, double base, Rng& rng, int label = 0) {
  ContextualSample s{Image(size, size, 3), BoundingBox(0, 0, 1, 1), label};
  for (auto& v : s.pixels.data()) {
    v = to_u8(std::clamp(base + rng.uniform(-0.1, 0.1), 0.0, 1.0) * 255.0);
  }
  return s;
}

// 500 images whose label is whether the mean intensity exceeds one half.
FeatureSet intensity_rule_set(int size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ContextualSample> samples;
  for (int i = 0; i < 500; ++i) {
    ContextualSample s = noise_sample(size, rng.uniform(0.05, 0.95), rng);
    double mean = 0;
    for (auto v : s.pixels.data()) mean += v / 255.0;
    mean /= static_cast<double>(s.pixels.data().size());
    s.label = mean > 0.5 ? 1 : 0;
    samples.push_back(std::move(s));
  }
  return featurize(samples, 32);
}

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale < 1e-7 ? std::abs(a - b) : std::abs(a - b) / scale;
}

}  // namespace

TEST_CASE("simplex checks") {
  CHECK_NOTHROW(check_simplex({0.2, 0.3, 0.5}, 3));
  CHECK_THROWS_AS(check_simplex({0.2, 0.3, 0.5}, 4), ValidationError);
  CHECK_THROWS_AS(check_simplex({0.25, 0.25}, 2), ValidationError);
  CHECK_THROWS_AS(check_simplex({1.2, -0.2}, 2), ValidationError);
  CHECK_NOTHROW(check_simplex({0.5 + 5e-7, 0.5}, 2));
  const ScoreVector v{{0.1, 0.6, 0.3}};
  CHECK(v.background_index() == 2);
  CHECK(v.best_object().first == 1);
  CHECK(v.best_object().second == 0.6);
}

TEST_CASE("untrained scorer is uniform and deterministic") {
  const BuiltinScorer s({"dog", "cat", "sheep"}, 32, 64);
  CHECK(s.num_outputs() == 4);
  Rng rng(1);
  const ContextualSample x = noise_sample(64, 0.4, rng);
  const ScoreVector v = s.score(x);
  REQUIRE(v.probs.size() == 4);
  for (double p : v.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s.score(x).probs == v.probs);
  CHECK_THROWS_AS(s.score(noise_sample(32, 0.4, rng)), ValidationError);
}

TEST_CASE("features are area averages") {
  Image img(64, 64, 3);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) img.at(x, y, 0) = (x / 2 + y / 2) % 2 ? 255 : 0;
  }
  const auto f = context_features(img, 32);
  REQUIRE(f.size() == 32 * 32 * 3);
  CHECK(f[0] == doctest::Approx(-0.5));
  CHECK(f[3] == doctest::Approx(0.5));
  const auto half = context_features(img, 16);
  for (std::size_t i = 0; i < half.size(); i += 3) CHECK(half[i] == doctest::Approx(0.0));
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(7);
  FeatureSet data;
  data.dim = 12;
  const std::size_t k = 4;
  for (int i = 0; i < 40; ++i) {
    std::vector<float> row(data.dim);
    for (auto& v : row) v = static_cast<float>(rng.uniform());
    data.append(row, static_cast<int>(rng.below(k)));
  }
  std::vector<double> w((data.dim + 1) * k);
  for (auto& v : w) v = rng.uniform(-0.5, 0.5);
  const double eps = 1e-4, wd = 1e-3;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::size_t> batch;
    for (int i = 0; i < 5; ++i) batch.push_back(rng.below(data.size()));
    std::vector<double> grad(w.size()), scratch(w.size());
    loss_and_gradient(w, data, batch, k, wd, grad);
    double worst = 0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      auto wp = w, wm = w;
      wp[j] += eps;
      wm[j] -= eps;
      const double fd = (loss_and_gradient(wp, data, batch, k, wd, scratch) -
                         loss_and_gradient(wm, data, batch, k, wd, scratch)) /
                        (2 * eps);
      worst = std::max(worst, relative_error(grad[j], fd));
    }
    CHECK(worst <= 1e-4);
  }
  // An empty batch leaves only the weight decay term.
  std::vector<double> grad(w.size());
  double sq = 0;
  for (double v : w) sq += v * v;
  CHECK(loss_and_gradient(w, data, {}, k, wd, grad) == doctest::Approx(0.5 * wd * sq));
  for (std::size_t j = 0; j < w.size(); ++j) CHECK(grad[j] == doctest::Approx(wd * w[j]));
}

TEST_CASE("training learns the intensity rule") {
  const FeatureSet data = intensity_rule_set(32, 3);
  TrainParams params;
  params.seed = 5;
  TrainReport report;
  const BuiltinScorer s = train_builtin(data, {"bright"}, params, &report, 32, 32);
  CHECK(report.train_accuracy >= 0.99);
  CHECK(report.val_accuracy >= 0.95);
  REQUIRE(!report.val_loss.empty());
  CHECK(report.val_loss[report.best_epoch] ==
        *std::min_element(report.val_loss.begin(), report.val_loss.end()));
  CHECK(report.val_indices.size() == 100);
  CHECK(report.train_loss.back() < report.train_loss.front());

  // Same seed, same model.
  const BuiltinScorer again = train_builtin(data, {"bright"}, params, nullptr, 32, 32);
  CHECK(again.weights() == s.weights());
}

TEST_CASE("zero epochs returns the zero model") {
  const FeatureSet data = intensity_rule_set(32, 4);
  TrainParams params;
  params.max_epochs = 0;
  const BuiltinScorer s = train_builtin(data, {"bright"}, params, nullptr, 32, 32);
  for (double w : s.weights()) CHECK(w == 0.0);
  for (double p : s.predict(data)) CHECK(p == doctest::Approx(0.5));
}

TEST_CASE("training input validation") {
  FeatureSet data;
  data.dim = 32 * 32 * 3;
  std::vector<float> row(data.dim, 0.5f);
  for (int i = 0; i < 10; ++i) data.append(row, 0);
  CHECK_THROWS_AS(train_builtin(data, {"a"}, {}, nullptr, 32, 32), ValidationError);
  data.append(row, 5);
  CHECK_THROWS_AS(train_builtin(data, {"a"}, {}, nullptr, 32, 32), ValidationError);
  TrainParams bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(train_builtin(data, {"a"}, bad, nullptr, 32, 32), ValidationError);
  TrainParams huge;
  huge.learning_rate = 1e300;
  huge.weight_decay = 1e10;
  FeatureSet two = data;
  two.labels.back() = 1;
  CHECK_THROWS_WITH_AS(train_builtin(two, {"a"}, huge, nullptr, 32, 32),
                       doctest::Contains("non-finite"), Error);
}

TEST_CASE("scorer file round trip") {
  const FeatureSet data = intensity_rule_set(32, 9);
  TrainParams params;
  params.max_epochs = 3;
  const BuiltinScorer s = train_builtin(data, {"bright"}, params, nullptr, 32, 32);
  ctxaug::testing::TempDir dir;
  s.save(dir / "s.bin");
  const BuiltinScorer back = BuiltinScorer::load(dir / "s.bin");
  CHECK(back.class_names() == s.class_names());
  CHECK(back.weights() == s.weights());
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const ContextualSample x = noise_sample(32, rng.uniform(), rng);
    CHECK(back.score(x).probs == s.score(x).probs);
  }
  const BuiltinScorer named({"zebra", "aardvark", "moose"}, 8, 16);
  CHECK(BuiltinScorer::deserialize(named.serialize()).class_names() ==
        std::vector<std::string>{"zebra", "aardvark", "moose"});

  auto bytes = s.serialize();
  bytes.resize(bytes.size() - 9);
  CHECK_THROWS_AS(BuiltinScorer::deserialize(bytes), ValidationError);
  auto bad_magic = s.serialize();
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(BuiltinScorer::deserialize(bad_magic), ValidationError);
  CHECK_THROWS_AS(BuiltinScorer::load(dir / "missing.bin"), IoError);
}

TEST_CASE("batch scoring agrees with single scoring") {
  const FeatureSet data = intensity_rule_set(32, 10);
  TrainParams params;
  params.max_epochs = 2;
  const BuiltinScorer s = train_builtin(data, {"bright"}, params, nullptr, 32, 32);
  Rng rng(6);
  std::vector<ContextualSample> xs;
  for (int i = 0; i < 7; ++i) xs.push_back(noise_sample(32, rng.uniform(), rng));
  const auto batch = s.score_batch(xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK_NOTHROW(check_simplex(batch[i].probs, 2));
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(batch[i].probs[c] == doctest::Approx(s.score(xs[i]).probs[c]).epsilon(1e-12));
    }
  }
}
