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

#include "ctxaug/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctxaug::kernels {
namespace {

constexpr double kFar = 1e20;

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), one line.
void distance_1d(const double* f, int n, std::ptrdiff_t stride, double* out, int* v, double* z) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto at = [&](int q) { return f[q * stride]; };
  auto cross = [&](int q, int p) {
    return ((at(q) + double(q) * q) - (at(p) + double(p) * p)) / (2.0 * q - 2.0 * p);
  };
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = cross(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = cross(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double d = q - v[k];
    out[q * stride] = d * d + at(v[k]);
  }
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

Image resize_bilinear(const Image& src, int width, int height, Exec exec) {
  Image out(width, height, src.channels());
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  const int ch = src.channels();
  const bool par = exec == Exec::kParallel;
  struct Tap {
    int i0, i1;
    double w;
  };
  auto taps = [](int n_out, int n_in, double step) {
    std::vector<Tap> t(n_out);
    for (int o = 0; o < n_out; ++o) {
      const double f = std::clamp((o + 0.5) * step - 0.5, 0.0, n_in - 1.0);
      const int i0 = static_cast<int>(f);
      t[o] = {i0, std::min(i0 + 1, n_in - 1), f - i0};
    }
    return t;
  };
  const std::vector<Tap> tx = taps(width, src.width(), sx);
  const std::vector<Tap> ty = taps(height, src.height(), sy);
#pragma omp parallel for schedule(static) if (par)
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* r0 = src.row(ty[y].i0);
    const std::uint8_t* r1 = src.row(ty[y].i1);
    const double wy = ty[y].w;
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < width; ++x) {
      const Tap& t = tx[x];
      const int a = t.i0 * ch, b = t.i1 * ch;
      for (int c = 0; c < ch; ++c) {
        const double top = r0[a + c] * (1 - t.w) + r0[b + c] * t.w;
        const double bot = r1[a + c] * (1 - t.w) + r1[b + c] * t.w;
        // Inputs are bytes, so the blend stays in [0, 255] and truncation
        // of v + 0.5 rounds half up like to_u8.
        dst[x * ch + c] = static_cast<std::uint8_t>(top * (1 - wy) + bot * wy + 0.5);
      }
    }
  }
  return out;
}

Plane<std::uint8_t> resize_nearest(const Plane<std::uint8_t>& src, int width, int height) {
  Plane<std::uint8_t> out(width, height);
  for (int y = 0; y < height; ++y) {
    const int syi = std::min(src.height() - 1, static_cast<int>((y + 0.5) * src.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sxi = std::min(src.width() - 1, static_cast<int>((x + 0.5) * src.width() / width));
      out.at(x, y) = src.at(sxi, syi);
    }
  }
  return out;
}

Plane<double> squared_distance_to_outside(const Mask& mask, Exec exec) {
  const int w = mask.width() + 2;
  const int h = mask.height() + 2;
  std::vector<double> grid(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      grid[static_cast<std::size_t>(y + 1) * w + x + 1] = mask.at(x, y) ? kFar : 0.0;
    }
  }
  std::vector<double> tmp(grid.size());
  const bool par = exec == Exec::kParallel;
#pragma omp parallel if (par)
  {
    const int n = std::max(w, h);
    std::vector<int> v(n);
    std::vector<double> z(n + 1);
#pragma omp for schedule(static)
    for (int x = 0; x < w; ++x) {
      distance_1d(grid.data() + x, h, w, tmp.data() + x, v.data(), z.data());
    }
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      const std::size_t off = static_cast<std::size_t>(y) * w;
      distance_1d(tmp.data() + off, w, 1, grid.data() + off, v.data(), z.data());
    }
  }
  Plane<double> out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      out.at(x, y) = grid[static_cast<std::size_t>(y + 1) * w + x + 1];
    }
  }
  return out;
}

std::vector<double> gaussian_taps(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + r];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

Plane<double> gaussian_blur(const Plane<double>& src, double sigma, Exec exec) {
  const auto taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  const int w = src.width(), h = src.height();
  Plane<double> tmp(w, h), out(w, h);
  const bool par = exec == Exec::kParallel;
#pragma omp parallel if (par)
  {
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = std::max(-r, -x); i <= std::min(r, w - 1 - x); ++i) {
          acc += taps[i + r] * src.at(x + i, y);
        }
        tmp.at(x, y) = acc;
      }
    }
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = std::max(-r, -y); i <= std::min(r, h - 1 - y); ++i) {
          acc += taps[i + r] * tmp.at(x, y + i);
        }
        out.at(x, y) = acc;
      }
    }
  }
  return out;
}

std::vector<std::pair<int, int>> motion_offsets(int length, double angle) {
  std::vector<std::pair<int, int>> out;
  out.reserve(length);
  const double c = std::cos(angle), s = std::sin(angle);
  for (int i = 0; i < length; ++i) {
    const double t = i - 0.5 * (length - 1);
    out.emplace_back(static_cast<int>(std::lround(t * c)), static_cast<int>(std::lround(t * s)));
  }
  return out;
}

Image motion_blur(const Image& src, int length, double angle, Exec exec) {
  const auto offsets = motion_offsets(length, angle);
  const int w = src.width(), h = src.height(), ch = src.channels();
  Image out(w, h, ch);
  const double inv = 1.0 / length;
  const bool par = exec == Exec::kParallel;
#pragma omp parallel for schedule(static) if (par)
  for (int y = 0; y < h; ++y) {
    std::vector<double> acc(ch);
    for (int x = 0; x < w; ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (const auto& [dx, dy] : offsets) {
        const int sx = clampi(x + dx, 0, w - 1);
        const int sy = clampi(y + dy, 0, h - 1);
        for (int c = 0; c < ch; ++c) acc[c] += src.at(sx, sy, c);
      }
      for (int c = 0; c < ch; ++c) out.at(x, y, c) = to_u8(acc[c] * inv);
    }
  }
  return out;
}

void affine_logits(std::span<const float> x, std::size_t n, std::size_t dim,
                   std::span<const double> w, std::size_t k, std::span<double> logits, Exec exec) {
  const bool par = exec == Exec::kParallel;
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < nn; ++i) {
    double* out = logits.data() + i * k;
    const double* bias = w.data() + dim * k;
    for (std::size_t c = 0; c < k; ++c) out[c] = bias[c];
    const float* xi = x.data() + i * dim;
    for (std::size_t d = 0; d < dim; ++d) {
      const double xv = xi[d];
      if (xv == 0.0) continue;
      const double* wr = w.data() + d * k;
      for (std::size_t c = 0; c < k; ++c) out[c] += xv * wr[c];
    }
  }
}

void affine_gradient(std::span<const float> x, std::size_t n, std::size_t dim,
                     std::span<const double> delta, std::size_t k, std::span<double> grad,
                     Exec exec) {
  const bool par = exec == Exec::kParallel;
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  const auto rows = static_cast<std::ptrdiff_t>(dim + 1);
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t d = 0; d < rows; ++d) {
    double* g = grad.data() + d * k;
    for (std::size_t c = 0; c < k; ++c) g[c] = 0.0;
    const bool bias = static_cast<std::size_t>(d) == dim;
    for (std::size_t i = 0; i < n; ++i) {
      const double xv = bias ? 1.0 : static_cast<double>(x[i * dim + d]);
      if (xv == 0.0) continue;
      const double* di = delta.data() + i * k;
      for (std::size_t c = 0; c < k; ++c) g[c] += xv * di[c];
    }
    for (std::size_t c = 0; c < k; ++c) g[c] *= inv_n;
  }
}

void gauss_seidel_sweep(Plane<double>& f, const Plane<double>& guidance, const Mask& interior,
                        Exec exec) {
  const int w = f.width(), h = f.height();
  auto update = [&](int x, int y) {
    f.at(x, y) = 0.25 * (f.at(x - 1, y) + f.at(x + 1, y) + f.at(x, y - 1) + f.at(x, y + 1) +
                         guidance.at(x, y));
  };
  if (exec == Exec::kSerial) {
    for (int y = 1; y < h - 1; ++y) {
      for (int x = 1; x < w - 1; ++x) {
        if (interior.at(x, y)) update(x, y);
      }
    }
    return;
  }
  for (int colour = 0; colour < 2; ++colour) {
#pragma omp parallel for schedule(static)
    for (int y = 1; y < h - 1; ++y) {
      for (int x = 1 + ((y + 1 + colour) & 1); x < w - 1; x += 2) {
        if (interior.at(x, y)) update(x, y);
      }
    }
  }
}

}  // namespace ctxaug::kernels
