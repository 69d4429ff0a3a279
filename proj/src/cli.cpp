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

#include "ctxaug/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "ctxaug/augmentor.hpp"
#include "ctxaug/context_sampler.hpp"
#include "ctxaug/error.hpp"
#include "ctxaug/instance_bank.hpp"
#include "ctxaug/png_io.hpp"
#include "ctxaug/scorer.hpp"
#include "ctxaug/scorer_bridge.hpp"
#include "ctxaug/synth_eval.hpp"

namespace fs = std::filesystem;

namespace ctxaug::cli {
namespace {

void log(const std::string& msg) { std::cerr << "ctxaug: " << msg << '\n'; }

struct Options {
  std::string dataset, out, bank, contexts, scorer, scorer_cmd;
  std::string mode = "context";
  std::string blend = "random";
  std::optional<std::string> category;
  std::uint64_t seed = 0;
  double paste_prob = 0.5;
  int max_instances = 2;
  int candidates = 200;
  double threshold = 0.8;
  int jobs = 0;
  int n = 8;
};

AugmentationConfig make_config(const Options& o) {
  AugmentationConfig cfg;
  cfg.paste_probability = o.paste_prob;
  cfg.max_instances = o.max_instances;
  cfg.candidates_per_image = o.candidates;
  cfg.score_threshold = o.threshold;
  cfg.blend = parse_blend(o.blend);
  cfg.category = o.category;
  cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

std::unique_ptr<Scorer> load_scorer(const Options& o) {
  if (!o.scorer_cmd.empty()) {
    return std::make_unique<RemoteScorer>(std::make_unique<ProcessTransport>(o.scorer_cmd));
  }
  if (!o.scorer.empty()) return std::make_unique<BuiltinScorer>(BuiltinScorer::load(o.scorer));
  throw ValidationError("context mode needs --scorer or --scorer-cmd");
}

int cmd_build_bank(const Options& o) {
  const InstanceBank bank = build_bank(load_dataset(o.dataset));
  bank.save(o.out);
  log("bank of " + std::to_string(bank.size()) + " instances written to " + o.out);
  return 0;
}

int cmd_gen_contexts(const Options& o) {
  const Dataset ds = load_dataset(o.dataset);
  const auto names = collect_categories(ds);
  const auto samples = build_context_dataset(ds, names, ContextGenParams{}, o.seed);
  write_context_dataset(o.out, names, samples);
  log(std::to_string(samples.size()) + " contexts written to " + o.out);
  return 0;
}

int cmd_train_scorer(const Options& o) {
  const ContextDatasetFile file = read_context_dataset(o.contexts);
  const FeatureSet features = featurize(file.samples, 32);
  TrainParams params;
  params.seed = o.seed;
  TrainReport report;
  const int input = file.samples.empty() ? 300 : file.samples.front().pixels.width();
  const BuiltinScorer scorer = train_builtin(features, file.class_names, params, &report, 32, input);
  scorer.save(o.out);
  char line[160];
  std::snprintf(line, sizeof line, "trained: best epoch %d, train acc %.4f, val acc %.4f",
                report.best_epoch, report.train_accuracy, report.val_accuracy);
  log(line);
  return 0;
}

struct Augmented {
  std::vector<AugmentedRecord> records;
};

Augmented augment_records(const Options& o, const Dataset& ds, AugmentationConfig cfg) {
  const AugmentMode mode = parse_mode(o.mode);
  std::optional<InstanceBank> bank;
  std::unique_ptr<Scorer> scorer;
  std::optional<ShapeHistogram> hist;
  if (mode != AugmentMode::kEnlarge) {
    if (o.bank.empty()) throw ValidationError("mode '" + o.mode + "' needs --bank");
    bank = InstanceBank::load(o.bank);
  }
  if (mode == AugmentMode::kContext) {
    scorer = load_scorer(o);
    hist = dataset_shape_histogram(ds);
  }
  const AugmentContext ctx{bank ? &*bank : nullptr, scorer.get(), hist ? &*hist : nullptr};
  return {augment_dataset(ds, ctx, cfg, mode, o.jobs)};
}

int cmd_augment(const Options& o) {
  const Dataset ds = load_dataset(o.dataset);
  const Augmented out = augment_records(o, ds, make_config(o));
  std::size_t pastes = 0;
  for (const auto& rec : out.records) {
    write_augmented(rec, o.out);
    pastes += rec.provenance.pastes.size();
  }
  log(std::to_string(out.records.size()) + " images, " + std::to_string(pastes) +
      " pastes written to " + o.out);
  return 0;
}

void draw_box(Image& img, const BoundingBox& box, Rgb c) {
  const int x0 = std::max(0, static_cast<int>(box.x0()));
  const int y0 = std::max(0, static_cast<int>(box.y0()));
  const int x1 = std::min(img.width(), static_cast<int>(box.x1())) - 1;
  const int y1 = std::min(img.height(), static_cast<int>(box.y1())) - 1;
  auto put = [&](int x, int y) {
    img.at(x, y, 0) = c.r;
    img.at(x, y, 1) = c.g;
    img.at(x, y, 2) = c.b;
  };
  for (int x = x0; x <= x1; ++x) {
    put(x, y0);
    put(x, y1);
  }
  for (int y = y0; y <= y1; ++y) {
    put(x0, y);
    put(x1, y);
  }
}

int cmd_preview(const Options& o) {
  Dataset ds = load_dataset(o.dataset);
  if (o.n < 1) throw ValidationError("--n must be >= 1");
  if (static_cast<int>(ds.size()) > o.n) ds.resize(o.n);
  AugmentationConfig cfg = make_config(o);
  cfg.paste_probability = 1.0;
  const Augmented out = augment_records(o, ds, cfg);
  fs::create_directories(o.out);
  for (const auto& rec : out.records) {
    Image img = to_rgb(rec.image);
    const std::size_t original = rec.annotation.objects.size() - rec.provenance.pastes.size();
    for (std::size_t k = 0; k < rec.annotation.objects.size(); ++k) {
      draw_box(img, rec.annotation.objects[k].box, k < original ? Rgb{0, 255, 0} : Rgb{255, 0, 0});
    }
    write_file(fs::path(o.out) / (rec.annotation.image_id + "_preview.png"), encode_png(img));
  }
  log(std::to_string(out.records.size()) + " previews written to " + o.out);
  return 0;
}

int cmd_eval_synth(const Options& o) {
  SynthSpec spec;
  spec.seed = o.seed;
  BenchmarkConfig cfg;
  cfg.jobs = o.jobs;
  const BenchmarkReport r = run_benchmark(spec, cfg);
  std::ofstream f(o.out);
  if (!f) throw IoError("cannot write " + o.out);
  f << r.to_json().dump(2) << '\n';
  if (!f) throw IoError("cannot write " + o.out);
  char line[200];
  std::snprintf(line, sizeof line, "context %.3f (%zu), random %.3f (%zu), chance %.3f, val acc %.3f",
                r.context_consistency, r.context_placements, r.random_consistency,
                r.random_placements, r.chance, r.scorer_val_accuracy);
  log(line);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  Options o;
  CLI::App app{"Context-driven copy-paste augmentation for detection datasets", "ctxaug"};
  app.require_subcommand(1, 1);

  auto* bank = app.add_subcommand("build-bank", "Cut every annotated instance out of a dataset");
  bank->add_option("--dataset", o.dataset, "Dataset directory")->required();
  bank->add_option("--out", o.out, "Bank directory")->required();

  auto* gen = app.add_subcommand("gen-contexts", "Write the masked context training set");
  gen->add_option("--dataset", o.dataset, "Dataset directory")->required();
  gen->add_option("--out", o.out, "Context set directory")->required();
  gen->add_option("--seed", o.seed, "Random seed");

  auto* train = app.add_subcommand("train-scorer", "Train the builtin context scorer");
  train->add_option("--contexts", o.contexts, "Context set directory")->required();
  train->add_option("--out", o.out, "Scorer file")->required();
  train->add_option("--seed", o.seed, "Random seed");

  auto add_augment_flags = [&](CLI::App* sub) {
    sub->add_option("--dataset", o.dataset, "Dataset directory")->required();
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--bank", o.bank, "Instance bank directory");
    sub->add_option("--scorer", o.scorer, "Builtin scorer file");
    sub->add_option("--scorer-cmd", o.scorer_cmd, "External scorer command");
    sub->add_option("--mode", o.mode, "context | random | enlarge | remove-context");
    sub->add_option("--category", o.category, "Single-category mode");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--paste-prob", o.paste_prob, "Per-image paste probability");
    sub->add_option("--max-instances", o.max_instances, "Pastes per image");
    sub->add_option("--candidates", o.candidates, "Candidate boxes per image");
    sub->add_option("--threshold", o.threshold, "Score threshold");
    sub->add_option("--blend", o.blend, "none | linear | gaussian | motion | poisson | random");
    sub->add_option("--jobs", o.jobs, "Worker threads (0 = all)");
  };
  auto* augment = app.add_subcommand("augment", "Augment a dataset");
  add_augment_flags(augment);
  auto* preview = app.add_subcommand("preview", "Render augmented samples with boxes drawn");
  add_augment_flags(preview);
  preview->add_option("--n", o.n, "Number of images");

  auto* synth = app.add_subcommand("eval-synth", "Run the synthetic placement benchmark");
  synth->add_option("--out", o.out, "Report JSON")->required();
  synth->add_option("--seed", o.seed, "Random seed");
  synth->add_option("--jobs", o.jobs, "Worker threads (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (*bank) return cmd_build_bank(o);
    if (*gen) return cmd_gen_contexts(o);
    if (*train) return cmd_train_scorer(o);
    if (*augment) return cmd_augment(o);
    if (*preview) return cmd_preview(o);
    if (*synth) return cmd_eval_synth(o);
  } catch (const IoError& e) {
    log(std::string("I/O error: ") + e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    log(std::string("I/O error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
  return 1;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace ctxaug::cli
