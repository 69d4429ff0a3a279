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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ctxaug/context_sampler.hpp"

namespace ctxaug {

/// Probabilities over K object classes followed by background at index K.
struct ScoreVector {
  std::vector<double> probs;

  std::size_t background_index() const noexcept { return probs.size() - 1; }
  /// Index and probability of the most likely non-background class.
  std::pair<std::size_t, double> best_object() const;
};

/// Throws ValidationError unless probs are finite, nonnegative and sum to 1
/// within tol.
void check_simplex(const std::vector<double>& probs, std::size_t expected_size, double tol = 1e-6);

/// Context scorer contract: a contextual image in, K + 1 probabilities out.
/// Implementations are safe to call concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual const std::vector<std::string>& class_names() const = 0;
  virtual ScoreVector score(const ContextualSample& sample) const = 0;
  std::size_t num_outputs() const { return class_names().size() + 1; }
};

/// Row-major float features, one row of `dim` values per sample.
struct FeatureSet {
  std::size_t dim = 0;
  std::vector<float> x;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  void append(std::span<const float> row, int label);
};

/// Area-averaged feature_size x feature_size RGB thumbnail, centred to
/// [-0.5, 0.5] so a zero bias sits at mid-grey.
std::vector<float> context_features(const Image& pixels, int feature_size);

FeatureSet featurize(std::span<const ContextualSample> samples, int feature_size);

/// Multinomial logistic regression on context_features. weights are
/// (dim + 1) x (K + 1), row-major, bias in the last row.
class BuiltinScorer : public Scorer {
 public:
  BuiltinScorer(std::vector<std::string> class_names, int feature_size = 32, int input_size = 300);

  const std::vector<std::string>& class_names() const override { return class_names_; }
  ScoreVector score(const ContextualSample& sample) const override;
  std::vector<ScoreVector> score_batch(std::span<const ContextualSample> samples) const;
  /// Probabilities for rows already in feature space.
  std::vector<double> predict(const FeatureSet& features) const;

  int feature_size() const noexcept { return feature_size_; }
  int input_size() const noexcept { return input_size_; }
  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(feature_size_) * feature_size_ * 3;
  }
  std::vector<double>& weights() noexcept { return weights_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  void save(const std::filesystem::path& path) const;
  static BuiltinScorer load(const std::filesystem::path& path);
  std::vector<std::uint8_t> serialize() const;
  static BuiltinScorer deserialize(std::span<const std::uint8_t> bytes);

 private:
  std::vector<std::string> class_names_;
  int feature_size_;
  int input_size_;
  std::vector<double> weights_;
};

struct TrainParams {
  double learning_rate = 1e-2;
  double weight_decay = 1e-4;
  int batch_size = 32;
  int max_epochs = 60;
  int early_stop_patience = 5;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> train_loss;  // per epoch, full training split
  std::vector<double> val_loss;
  int best_epoch = 0;
  bool lr_dropped = false;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  std::vector<std::size_t> val_indices;
};

/// Mean cross-entropy over `batch` plus weight_decay/2 * ||w||^2, and its
/// gradient written to grad. An empty batch leaves only the decay term.
double loss_and_gradient(std::span<const double> w, const FeatureSet& data,
                         std::span<const std::size_t> batch, std::size_t num_outputs,
                         double weight_decay, std::span<double> grad);

/// Mini-batch gradient descent with early stopping on a seeded validation
/// split; the learning rate drops x10 once at the first plateau. Returns the
/// best-validation weights.
BuiltinScorer train_builtin(const FeatureSet& data, const std::vector<std::string>& class_names,
                            const TrainParams& params, TrainReport* report = nullptr,
                            int feature_size = 32, int input_size = 300);

/// Fraction of rows whose arg-max prediction equals the label.
double accuracy(const BuiltinScorer& scorer, const FeatureSet& data,
                std::span<const std::size_t> rows = {});

}  // namespace ctxaug
