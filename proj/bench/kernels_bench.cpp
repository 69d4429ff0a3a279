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

// Serial reference vs OpenMP path for each hot kernel. The second benchmark
// argument selects the path (0 = serial, 1 = parallel).

#include <benchmark/benchmark.h>

#include <cmath>

#include "ctxaug/kernels.hpp"
#include "ctxaug/rng.hpp"

using namespace ctxaug;
using kernels::Exec;

namespace {

Exec exec_of(const benchmark::State& state) {
  return state.range(1) ? Exec::kParallel : Exec::kSerial;
}

Image noise_image(int w, int h) {
  Rng rng(1);
  Image img(w, h, 3);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

Mask disk_mask(int n) {
  Mask m(n, n, 0);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) m.at(x, y) = std::hypot(x - n / 2.0, y - n / 2.0) < n * 0.4;
  }
  return m;
}

void BM_ResizeBilinear(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image src = noise_image(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::resize_bilinear(src, 300, 300, exec_of(state)));
}

void BM_DistanceTransform(benchmark::State& state) {
  const Mask m = disk_mask(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::squared_distance_to_outside(m, exec_of(state)));
  }
}

void BM_GaussianBlur(benchmark::State& state) {
  const Mask m = disk_mask(static_cast<int>(state.range(0)));
  Plane<double> p(m.width(), m.height());
  for (std::size_t i = 0; i < p.data().size(); ++i) p.data()[i] = m.data()[i];
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gaussian_blur(p, 2.0, exec_of(state)));
}

void BM_MotionBlur(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image src = noise_image(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::motion_blur(src, 7, 0.6, exec_of(state)));
}

void BM_AffineLogits(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0)), dim = 3072, k = 3;
  Rng rng(2);
  std::vector<float> x(n * dim);
  for (auto& v : x) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  std::vector<double> w((dim + 1) * k), logits(n * k);
  for (auto& v : w) v = rng.uniform(-0.1, 0.1);
  for (auto _ : state) {
    kernels::affine_logits(x, n, dim, w, k, logits, exec_of(state));
    benchmark::DoNotOptimize(logits.data());
  }
}

void BM_GaussSeidelSweep(benchmark::State& state) {
  const Mask m = disk_mask(static_cast<int>(state.range(0)));
  Plane<double> f(m.width(), m.height(), 100.0), g(m.width(), m.height(), 1.0);
  for (auto _ : state) {
    kernels::gauss_seidel_sweep(f, g, m, exec_of(state));
    benchmark::DoNotOptimize(f.data().data());
  }
}

}  // namespace

BENCHMARK(BM_ResizeBilinear)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DistanceTransform)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GaussianBlur)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MotionBlur)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AffineLogits)->ArgsProduct({{32, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GaussSeidelSweep)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
