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

#include "ctxaug/scorer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "ctxaug/error.hpp"
#include "ctxaug/kernels.hpp"
#include "ctxaug/png_io.hpp"

namespace ctxaug {

std::pair<std::size_t, double> ScoreVector::best_object() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i + 1 < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return {best, probs.size() > 1 ? probs[best] : 0.0};
}

void check_simplex(const std::vector<double>& probs, std::size_t expected_size, double tol) {
  if (probs.size() != expected_size) {
    throw ValidationError("score vector has " + std::to_string(probs.size()) + " entries, expected " +
                          std::to_string(expected_size));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0) throw ValidationError("score vector has a negative or non-finite entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw ValidationError("score vector sums to " + std::to_string(sum) + ", not 1");
  }
}

void FeatureSet::append(std::span<const float> row, int label) {
  if (dim == 0) dim = row.size();
  if (row.size() != dim) throw ValidationError("feature row has the wrong width");
  x.insert(x.end(), row.begin(), row.end());
  labels.push_back(label);
}

namespace {

struct Tap {
  int src;
  double weight;
};

// Box-filter taps mapping n source cells onto m output cells.
std::vector<std::vector<Tap>> area_taps(int n, int m) {
  std::vector<std::vector<Tap>> taps(m);
  const double r = static_cast<double>(n) / m;
  for (int j = 0; j < m; ++j) {
    const double a = j * r, b = (j + 1) * r;
    for (int i = static_cast<int>(std::floor(a)); i < std::min(n, static_cast<int>(std::ceil(b))); ++i) {
      const double overlap = std::min<double>(b, i + 1) - std::max<double>(a, i);
      if (overlap > 0) taps[j].push_back({i, overlap / r});
    }
  }
  return taps;
}

void softmax_inplace(double* v, std::size_t k) {
  const double m = *std::max_element(v, v + k);
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    v[c] = std::exp(v[c] - m);
    sum += v[c];
  }
  for (std::size_t c = 0; c < k; ++c) v[c] /= sum;
}

constexpr char kMagic[8] = {'C', 'T', 'X', 'S', 'C', 'O', 'R', 'E'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  std::uint64_t u(int n) {
    need(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ValidationError("scorer file is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<float> context_features(const Image& pixels, int feature_size) {
  const auto tx = area_taps(pixels.width(), feature_size);
  const auto ty = area_taps(pixels.height(), feature_size);
  const int ch = pixels.channels();
  std::vector<float> out(static_cast<std::size_t>(feature_size) * feature_size * 3);
  std::vector<double> row(static_cast<std::size_t>(feature_size) * 3);
  for (int oy = 0; oy < feature_size; ++oy) {
    std::fill(row.begin(), row.end(), 0.0);
    for (const auto& [sy, wy] : ty[oy]) {
      const std::uint8_t* src = pixels.row(sy);
      for (int ox = 0; ox < feature_size; ++ox) {
        for (const auto& [sx, wx] : tx[ox]) {
          for (int c = 0; c < 3; ++c) {
            row[ox * 3 + c] += wy * wx * src[sx * ch + std::min(c, ch - 1)];
          }
        }
      }
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      out[oy * row.size() + i] = static_cast<float>(row[i] / 255.0 - 0.5);
    }
  }
  return out;
}

FeatureSet featurize(std::span<const ContextualSample> samples, int feature_size) {
  FeatureSet fs;
  fs.dim = static_cast<std::size_t>(feature_size) * feature_size * 3;
  fs.x.resize(fs.dim * samples.size());
  fs.labels.resize(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto f = context_features(samples[i].pixels, feature_size);
    std::copy(f.begin(), f.end(), fs.x.begin() + i * fs.dim);
    fs.labels[i] = samples[i].label;
  }
  return fs;
}

BuiltinScorer::BuiltinScorer(std::vector<std::string> class_names, int feature_size, int input_size)
    : class_names_(std::move(class_names)), feature_size_(feature_size), input_size_(input_size) {
  if (class_names_.empty()) throw ValidationError("scorer needs at least one object class");
  if (feature_size_ < 1 || input_size_ < feature_size_) {
    throw ValidationError("invalid scorer geometry");
  }
  weights_.assign((dim() + 1) * num_outputs(), 0.0);
}

ScoreVector BuiltinScorer::score(const ContextualSample& sample) const {
  const Image& px = sample.pixels;
  if (px.width() != input_size_ || px.height() != input_size_ || px.channels() != 3) {
    throw ValidationError("scorer expects a " + std::to_string(input_size_) + "x" +
                          std::to_string(input_size_) + " RGB sample");
  }
  const auto f = context_features(px, feature_size_);
  const std::size_t k = num_outputs();
  ScoreVector out{std::vector<double>(k)};
  kernels::affine_logits(f, 1, dim(), weights_, k, out.probs, kernels::Exec::kSerial);
  softmax_inplace(out.probs.data(), k);
  return out;
}

std::vector<ScoreVector> BuiltinScorer::score_batch(std::span<const ContextualSample> samples) const {
  std::vector<ScoreVector> out(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = score(samples[i]);
  return out;
}

std::vector<double> BuiltinScorer::predict(const FeatureSet& features) const {
  if (features.size() > 0 && features.dim != dim()) throw ValidationError("feature width mismatch");
  const std::size_t k = num_outputs();
  std::vector<double> out(features.size() * k);
  kernels::affine_logits(features.x, features.size(), dim(), weights_, k, out);
  for (std::size_t i = 0; i < features.size(); ++i) softmax_inplace(out.data() + i * k, k);
  return out;
}

std::vector<std::uint8_t> BuiltinScorer::serialize() const {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(feature_size_));
  put_u32(out, static_cast<std::uint32_t>(input_size_));
  put_u32(out, static_cast<std::uint32_t>(class_names_.size()));
  for (const auto& name : class_names_) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
  }
  put_u64(out, weights_.size());
  for (double w : weights_) put_u64(out, std::bit_cast<std::uint64_t>(w));
  return out;
}

BuiltinScorer BuiltinScorer::deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(8) != std::string(kMagic, 8)) throw ValidationError("not a scorer file (bad magic)");
  if (r.u(4) != kVersion) throw ValidationError("unsupported scorer file version");
  const auto feature_size = static_cast<int>(r.u(4));
  const auto input_size = static_cast<int>(r.u(4));
  const auto n_classes = r.u(4);
  if (n_classes == 0 || n_classes > 100000 || feature_size < 1 || feature_size > 4096) {
    throw ValidationError("corrupt scorer header");
  }
  std::vector<std::string> names;
  for (std::uint64_t i = 0; i < n_classes; ++i) names.push_back(r.str(r.u(4)));
  BuiltinScorer s(std::move(names), feature_size, input_size);
  const auto count = r.u(8);
  if (count != s.weights_.size()) throw ValidationError("corrupt scorer header (weight count)");
  for (double& w : s.weights_) {
    w = std::bit_cast<double>(r.u(8));
    if (!std::isfinite(w)) throw ValidationError("scorer file holds non-finite weights");
  }
  if (!r.done()) throw ValidationError("trailing bytes in scorer file");
  return s;
}

void BuiltinScorer::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

BuiltinScorer BuiltinScorer::load(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

double loss_and_gradient(std::span<const double> w, const FeatureSet& data,
                         std::span<const std::size_t> batch, std::size_t k, double weight_decay,
                         std::span<double> grad) {
  const std::size_t dim = data.dim;
  const std::size_t n = batch.size();
  std::vector<float> xb(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(data.x.begin() + batch[i] * dim, dim, xb.begin() + i * dim);
  }
  std::vector<double> delta(n * k);
  kernels::affine_logits(xb, n, dim, w, k, delta);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double* p = delta.data() + i * k;
    softmax_inplace(p, k);
    const auto y = static_cast<std::size_t>(data.labels[batch[i]]);
    loss -= std::log(std::max(p[y], 1e-300));
    p[y] -= 1.0;
  }
  if (n > 0) loss /= static_cast<double>(n);
  kernels::affine_gradient(xb, n, dim, delta, k, grad);
  double sq = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    sq += w[j] * w[j];
    grad[j] += weight_decay * w[j];
  }
  return loss + 0.5 * weight_decay * sq;
}

double accuracy(const BuiltinScorer& scorer, const FeatureSet& data,
                std::span<const std::size_t> rows) {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), 0);
    rows = all;
  }
  if (rows.empty()) return 0.0;
  FeatureSet subset;
  subset.dim = data.dim;
  for (std::size_t r : rows) {
    subset.append(std::span(data.x).subspan(r * data.dim, data.dim), data.labels[r]);
  }
  const auto probs = scorer.predict(subset);
  const std::size_t k = scorer.num_outputs();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const auto* p = probs.data() + i * k;
    const auto best = static_cast<int>(std::max_element(p, p + k) - p);
    correct += best == subset.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(subset.size());
}

namespace {

double mean_loss(const BuiltinScorer& s, const FeatureSet& data,
                 std::span<const std::size_t> rows, double weight_decay) {
  std::vector<double> scratch(s.weights().size());
  return loss_and_gradient(s.weights(), data, rows, s.num_outputs(), weight_decay, scratch);
}

}  // namespace

BuiltinScorer train_builtin(const FeatureSet& data, const std::vector<std::string>& class_names,
                            const TrainParams& p, TrainReport* report, int feature_size,
                            int input_size) {
  if (!(p.learning_rate > 0) || !(p.weight_decay >= 0) || p.batch_size < 1 || p.max_epochs < 0 ||
      p.early_stop_patience < 1 || !(p.val_fraction >= 0) || !(p.val_fraction < 1)) {
    throw ValidationError("invalid training parameters");
  }
  BuiltinScorer scorer(class_names, feature_size, input_size);
  const std::size_t k = scorer.num_outputs();
  if (data.size() > 0 && data.dim != scorer.dim()) throw ValidationError("feature width mismatch");
  std::vector<int> seen(k, 0);
  for (int label : data.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw ValidationError("label " + std::to_string(label) + " outside [0, " + std::to_string(k) + ")");
    }
    seen[label] = 1;
  }
  if (std::accumulate(seen.begin(), seen.end(), 0) < 2) {
    throw ValidationError("training data must contain at least two classes");
  }

  Rng rng(p.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  std::size_t n_val = static_cast<std::size_t>(std::lround(p.val_fraction * data.size()));
  if (p.val_fraction > 0 && data.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, data.size() - 1);
  const std::vector<std::size_t> val(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> train(order.begin() + n_val, order.end());

  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = TrainReport{};
  rep.val_indices = val;

  std::vector<double> grad(scorer.weights().size());
  std::vector<double> best = scorer.weights();
  double best_val = std::numeric_limits<double>::infinity();
  double lr = p.learning_rate;
  int stale = 0;
  for (int epoch = 0; epoch < p.max_epochs; ++epoch) {
    rng.shuffle(train.begin(), train.end());
    for (std::size_t start = 0; start < train.size(); start += p.batch_size) {
      const std::size_t end = std::min(train.size(), start + p.batch_size);
      const std::span<const std::size_t> batch(train.data() + start, end - start);
      const double loss = loss_and_gradient(scorer.weights(), data, batch, k, p.weight_decay, grad);
      if (!std::isfinite(loss)) {
        throw Error("non-finite training loss at epoch " + std::to_string(epoch));
      }
      auto& w = scorer.weights();
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * grad[j];
    }
    const double train_loss = mean_loss(scorer, data, train, p.weight_decay);
    const double val_loss = val.empty() ? train_loss : mean_loss(scorer, data, val, p.weight_decay);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw Error("non-finite training loss at epoch " + std::to_string(epoch));
    }
    rep.train_loss.push_back(train_loss);
    rep.val_loss.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best = scorer.weights();
      rep.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= p.early_stop_patience) {
      if (rep.lr_dropped) break;
      lr /= 10.0;
      rep.lr_dropped = true;
      stale = 0;
    }
  }
  scorer.weights() = std::move(best);
  rep.train_accuracy = train.empty() ? 0.0 : accuracy(scorer, data, train);
  rep.val_accuracy = val.empty() ? rep.train_accuracy : accuracy(scorer, data, val);
  return scorer;
}

}  // namespace ctxaug
