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

#include "ctxaug/context_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ctxaug/error.hpp"
#include "ctxaug/kernels.hpp"
#include "ctxaug/png_io.hpp"

namespace ctxaug {

namespace fs = std::filesystem;

void ContextGenParams::validate() const {
  if (!(dilation_lo > 1.0) || dilation_hi < dilation_lo) {
    throw ValidationError("dilation range must satisfy 1 < lo <= hi");
  }
  if (contexts_per_box < 1 || bg_ratio < 0 || out_size < 8 || max_rejections < 1) {
    throw ValidationError("invalid context generation counts");
  }
  if (!(bg_iou_max >= 0) || !(bg_iou_max < 1)) throw ValidationError("bg_iou_max must be in [0, 1)");
}

NeighbourhoodDraw draw_neighbourhood(const ContextGenParams& params, Rng& rng) {
  NeighbourhoodDraw d;
  d.dilation_x = rng.uniform(params.dilation_lo, params.dilation_hi);
  d.dilation_y = rng.uniform(params.dilation_lo, params.dilation_hi);
  d.jitter_x = rng.uniform();
  d.jitter_y = rng.uniform();
  return d;
}

BoundingBox neighbourhood_of(const BoundingBox& box, const NeighbourhoodDraw& draw, int image_w,
                             int image_h) {
  const double nw = box.width() * draw.dilation_x;
  const double nh = box.height() * draw.dilation_y;
  const double x0 = box.x0() - (nw - box.width()) * draw.jitter_x;
  const double y0 = box.y0() - (nh - box.height()) * draw.jitter_y;
  const double cx0 = std::max(0.0, std::floor(x0));
  const double cy0 = std::max(0.0, std::floor(y0));
  const double cx1 = std::min<double>(image_w, std::ceil(x0 + nw));
  const double cy1 = std::min<double>(image_h, std::ceil(y0 + nh));
  // Clipping can never cut into the box itself.
  return BoundingBox(std::min(cx0, std::floor(box.x0())), std::min(cy0, std::floor(box.y0())),
                     std::max(cx1, std::ceil(box.x1())), std::max(cy1, std::ceil(box.y1())));
}

ContextualSample make_context(const Image& image, const BoundingBox& box,
                              const BoundingBox& neighbourhood, const ContextGenParams& params,
                              int label) {
  const int nx = static_cast<int>(neighbourhood.x0()), ny = static_cast<int>(neighbourhood.y0());
  const int nw = static_cast<int>(neighbourhood.width());
  const int nh = static_cast<int>(neighbourhood.height());
  Image window = to_rgb(crop(image, nx, ny, nw, nh));
  const Rgb fill = params.fill;
  auto paint = [&fill](Image& img, int x0, int y0, int x1, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        img.at(x, y, 0) = fill.r;
        img.at(x, y, 1) = fill.g;
        img.at(x, y, 2) = fill.b;
      }
    }
  };
  // Mask the source first so no object pixels bleed in through
  // interpolation. Fractional boxes are masked outward to whole pixels and
  // the masked region is mapped from that same integral rectangle.
  const int bx0 = std::clamp(static_cast<int>(std::floor(box.x0())) - nx, 0, nw);
  const int by0 = std::clamp(static_cast<int>(std::floor(box.y0())) - ny, 0, nh);
  const int bx1 = std::clamp(static_cast<int>(std::ceil(box.x1())) - nx, 0, nw);
  const int by1 = std::clamp(static_cast<int>(std::ceil(box.y1())) - ny, 0, nh);
  paint(window, bx0, by0, bx1, by1);

  const int out = params.out_size;
  ContextualSample sample{kernels::resize_bilinear(window, out, out),
                          BoundingBox(0, 0, 1, 1), label};
  const double sx = static_cast<double>(out) / nw, sy = static_cast<double>(out) / nh;
  auto map = [out](int v, double s) {
    return std::clamp(static_cast<int>(std::lround(v * s)), 0, out);
  };
  int mx0 = map(bx0, sx), mx1 = map(bx1, sx);
  int my0 = map(by0, sy), my1 = map(by1, sy);
  if (mx1 <= mx0) mx1 = std::min(out, mx0 + 1), mx0 = mx1 - 1;
  if (my1 <= my0) my1 = std::min(out, my0 + 1), my0 = my1 - 1;
  paint(sample.pixels, mx0, my0, mx1, my1);
  sample.masked_region = BoundingBox(mx0, my0, mx1, my1);
  return sample;
}

ContextualSample positive_context(const Image& image, const BoundingBox& gt_box, int label,
                                  const ContextGenParams& params, Rng& rng) {
  if (!gt_box.inside(image.width(), image.height())) {
    throw ValidationError("box " + to_string(gt_box) + " outside the image");
  }
  const auto draw = draw_neighbourhood(params, rng);
  return make_context(image, gt_box, neighbourhood_of(gt_box, draw, image.width(), image.height()),
                      params, label);
}

BoundingBox sample_background_box(int image_w, int image_h, std::span<const BoundingBox> gt,
                                  const ShapeHistogram& hist, const ContextGenParams& params,
                                  Rng& rng) {
  for (int attempt = 0; attempt < params.max_rejections; ++attempt) {
    const Shape shape = sample_shape(hist, rng);
    const double cx = rng.uniform(0.0, image_w);
    const double cy = rng.uniform(0.0, image_h);
    const auto box = box_from_shape(shape, cx, cy, image_w, image_h);
    if (box && max_iou(*box, gt) <= params.bg_iou_max) return *box;
  }
  throw ValidationError("image too crowded: no background box after " +
                        std::to_string(params.max_rejections) + " attempts");
}

ContextualSample background_context(const Image& image, std::span<const BoundingBox> gt,
                                    const ShapeHistogram& hist, int background_label,
                                    const ContextGenParams& params, Rng& rng) {
  const BoundingBox box =
      sample_background_box(image.width(), image.height(), gt, hist, params, rng);
  const auto draw = draw_neighbourhood(params, rng);
  return make_context(image, box, neighbourhood_of(box, draw, image.width(), image.height()),
                      params, background_label);
}

ShapeHistogram dataset_shape_histogram(const Dataset& dataset) {
  std::vector<Shape> shapes;
  for (const auto& rec : dataset) {
    for (const auto& o : rec.annotation.objects) {
      shapes.push_back(shape_of(o.box, rec.annotation.width, rec.annotation.height));
    }
  }
  return build_shape_histogram(shapes);
}

namespace {

struct Job {
  std::size_t image = 0;
  int object = -1;  // -1 for background
  std::uint64_t seed = 0;
};

int label_of(const std::vector<std::string>& names, const std::string& category) {
  const auto it = std::find(names.begin(), names.end(), category);
  if (it == names.end()) throw ValidationError("category '" + category + "' not in class list");
  return static_cast<int>(it - names.begin());
}

}  // namespace

void for_each_context(const Dataset& dataset, const std::vector<std::string>& class_names,
                      const ContextGenParams& params, std::uint64_t seed,
                      const std::function<void(ContextualSample&&)>& sink) {
  params.validate();
  std::vector<Job> jobs;
  std::vector<std::vector<BoundingBox>> gt(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& ann = dataset[i].annotation;
    gt[i] = ann.boxes();
    const std::uint64_t image_seed = derive_seed(seed, ann.image_id);
    int n = 0;
    for (std::size_t k = 0; k < ann.objects.size(); ++k) {
      label_of(class_names, ann.objects[k].category);
      for (int c = 0; c < params.contexts_per_box; ++c) {
        jobs.push_back({i, static_cast<int>(k), derive_seed(image_seed, "p" + std::to_string(n++))});
      }
    }
    const int backgrounds = n * params.bg_ratio;
    for (int b = 0; b < backgrounds; ++b) {
      jobs.push_back({i, -1, derive_seed(image_seed, "b" + std::to_string(b))});
    }
  }
  if (jobs.empty() || std::none_of(jobs.begin(), jobs.end(), [](const Job& j) { return j.object >= 0; })) {
    throw ValidationError("dataset has no ground-truth boxes");
  }
  const ShapeHistogram hist = dataset_shape_histogram(dataset);
  Rng order(seed);
  order.shuffle(jobs.begin(), jobs.end());

  const int background = static_cast<int>(class_names.size());
  auto run = [&](const Job& job) -> ContextualSample {
    Rng rng(job.seed);
    if (job.object >= 0) {
      const auto& rec = dataset[job.image];
      const auto& obj = rec.annotation.objects[job.object];
      return positive_context(rec.image, obj.box, label_of(class_names, obj.category), params, rng);
    }
    // Crowded images hand their background quota to the next images in order.
    for (std::size_t step = 0; step < dataset.size(); ++step) {
      const std::size_t i = (job.image + step) % dataset.size();
      try {
        return background_context(dataset[i].image, gt[i], hist, background, params, rng);
      } catch (const ValidationError&) {
        if (step + 1 == dataset.size()) throw;
      }
    }
    throw ValidationError("image too crowded");
  };

  constexpr std::size_t kChunk = 64;
  std::vector<std::optional<ContextualSample>> buffer(kChunk);
  for (std::size_t start = 0; start < jobs.size(); start += kChunk) {
    const auto count = static_cast<std::ptrdiff_t>(std::min(kChunk, jobs.size() - start));
    std::string failure;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < count; ++j) {
      try {
        buffer[j] = run(jobs[start + j]);
      } catch (const std::exception& e) {
#pragma omp critical
        failure = e.what();
      }
    }
    if (!failure.empty()) throw ValidationError(failure);
    for (std::ptrdiff_t j = 0; j < count; ++j) {
      sink(std::move(*buffer[j]));
      buffer[j].reset();
    }
  }
}

std::vector<ContextualSample> build_context_dataset(const Dataset& dataset,
                                                    const std::vector<std::string>& class_names,
                                                    const ContextGenParams& params,
                                                    std::uint64_t seed) {
  std::vector<ContextualSample> out;
  for_each_context(dataset, class_names, params, seed,
                   [&out](ContextualSample&& s) { out.push_back(std::move(s)); });
  return out;
}

void write_context_dataset(const fs::path& dir, const std::vector<std::string>& class_names,
                           std::span<const ContextualSample> samples) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ostringstream csv;
  csv << "file,label,x0,y0,x1,y1\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    const auto& s = samples[i];
    write_file(dir / name, encode_png(s.pixels));
    csv << name << ',' << s.label << ',' << s.masked_region.x0() << ',' << s.masked_region.y0()
        << ',' << s.masked_region.x1() << ',' << s.masked_region.y1() << '\n';
  }
  const std::string text = csv.str();
  write_file(dir / "labels.csv",
             std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  const std::string classes = nlohmann::json(class_names).dump() + "\n";
  write_file(dir / "classes.json",
             std::span(reinterpret_cast<const std::uint8_t*>(classes.data()), classes.size()));
}

ContextDatasetFile read_context_dataset(const fs::path& dir) {
  ContextDatasetFile out;
  const auto classes = read_file(dir / "classes.json");
  try {
    out.class_names = nlohmann::json::parse(classes.begin(), classes.end()).get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("classes.json: ") + e.what());
  }
  const auto csv_bytes = read_file(dir / "labels.csv");
  std::istringstream csv(std::string(csv_bytes.begin(), csv_bytes.end()));
  std::string line;
  int line_no = 0;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, ',');) cols.push_back(col);
    if (cols.size() != 6) throw ParseError("labels.csv: expected 6 columns", line_no);
    try {
      ContextualSample s{decode_png(read_file(dir / cols[0])),
                         BoundingBox(std::stod(cols[2]), std::stod(cols[3]), std::stod(cols[4]),
                                     std::stod(cols[5])),
                         std::stoi(cols[1])};
      if (s.label < 0 || s.label > static_cast<int>(out.class_names.size())) {
        throw ValidationError("labels.csv: label out of range");
      }
      s.pixels = to_rgb(s.pixels);
      out.samples.push_back(std::move(s));
    } catch (const std::logic_error&) {
      throw ParseError("labels.csv: bad number", line_no);
    }
  }
  return out;
}

}  // namespace ctxaug
