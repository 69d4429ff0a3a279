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

// Independent reference computations. These deliberately use the most
// direct formulation available (pixel counting, brute force, dense
// solves) and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace ctxaug::oracle {

/// Number of grid cells of side `step` whose centres lie in [lo, hi).
inline long count_cells(double lo, double hi, double extent, double step) {
  long n = 0;
  for (long i = 0; (i + 0.5) * step < extent; ++i) {
    const double c = (i + 0.5) * step;
    if (c >= lo && c < hi) ++n;
  }
  return n;
}

/// IoU by counting fine-grid cells. Intersections of axis-aligned boxes are
/// products of 1D cell sets, so counting per axis counts the 2D cells.
inline double grid_iou(const double a[4], const double b[4], double extent, double step) {
  const long ax = count_cells(a[0], a[2], extent, step), ay = count_cells(a[1], a[3], extent, step);
  const long bx = count_cells(b[0], b[2], extent, step), by = count_cells(b[1], b[3], extent, step);
  const long ix = count_cells(std::max(a[0], b[0]), std::min(a[2], b[2]), extent, step);
  const long iy = count_cells(std::max(a[1], b[1]), std::min(a[3], b[3]), extent, step);
  const double inter = static_cast<double>(ix) * iy;
  const double uni = static_cast<double>(ax) * ay + static_cast<double>(bx) * by - inter;
  return uni > 0 ? inter / uni : 0.0;
}

/// Continuous IoU written out directly from the areas.
inline double box_iou(double ax0, double ay0, double ax1, double ay1, double bx0, double by0,
                      double bx1, double by1) {
  const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = iw * ih;
  return inter / ((ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter);
}

/// Integer-pixel IoU on a w x h grid, cell by cell.
inline double pixel_iou(const int a[4], const int b[4], int w, int h) {
  long inter = 0, uni = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool ia = x >= a[0] && x < a[2] && y >= a[1] && y < a[3];
      const bool ib = x >= b[0] && x < b[2] && y >= b[1] && y < b[3];
      inter += ia && ib;
      uni += ia || ib;
    }
  }
  return uni ? static_cast<double>(inter) / uni : 0.0;
}

/// Euclidean distance from each pixel to the nearest pixel outside the
/// mask, with everything beyond the grid counted as outside.
inline std::vector<double> brute_distance(const std::vector<std::uint8_t>& mask, int w, int h) {
  std::vector<double> d(mask.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask[y * w + x]) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int v = -1; v <= h; ++v) {
        for (int u = -1; u <= w; ++u) {
          const bool outside = u < 0 || v < 0 || u >= w || v >= h || !mask[v * w + u];
          if (outside) best = std::min(best, std::hypot(u - x, v - y));
        }
      }
      d[y * w + x] = best;
    }
  }
  return d;
}

/// Dense 2D convolution of a 0/1 mask with a normalised Gaussian of the
/// given tap radius, zero outside the grid.
inline std::vector<double> dense_gaussian(const std::vector<std::uint8_t>& mask, int w, int h,
                                          double sigma, int radius) {
  double total = 0.0;
  for (int v = -radius; v <= radius; ++v) {
    for (int u = -radius; u <= radius; ++u) total += std::exp(-(u * u + v * v) / (2 * sigma * sigma));
  }
  std::vector<double> out(mask.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int v = -radius; v <= radius; ++v) {
        for (int u = -radius; u <= radius; ++u) {
          const int xx = x + u, yy = y + v;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h || !mask[yy * w + xx]) continue;
          acc += std::exp(-(u * u + v * v) / (2 * sigma * sigma));
        }
      }
      out[y * w + x] = acc / total;
    }
  }
  return out;
}

/// Solves a dense n x n system by Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    }
    std::swap(a[k], a[p]);
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Scale-grid check of the three matching constraints.
inline bool scale_feasible(double s, double w, double h, double cw, double ch, double frac) {
  return s * w <= cw && s * h <= ch && s * s * w * h >= frac * cw * ch;
}

}  // namespace ctxaug::oracle
