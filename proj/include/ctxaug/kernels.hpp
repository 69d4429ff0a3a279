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
#include <span>
#include <utility>
#include <vector>

#include "ctxaug/image.hpp"

/// Data-parallel inner loops. Every kernel has a serial reference path and an
/// OpenMP path; except for the Gauss-Seidel sweep (whose update order differs
/// by construction) both paths produce bit-identical output.
namespace ctxaug::kernels {

enum class Exec { kSerial, kParallel };

/// Bilinear resize with half-pixel centres and clamped borders, rounded half-up.
Image resize_bilinear(const Image& src, int width, int height, Exec exec = Exec::kParallel);

/// Nearest-neighbour resize of a single-channel plane.
Plane<std::uint8_t> resize_nearest(const Plane<std::uint8_t>& src, int width, int height);

/// Squared Euclidean distance from each pixel centre to the nearest pixel
/// with mask == 0. Pixels outside the grid count as 0.
Plane<double> squared_distance_to_outside(const Mask& mask, Exec exec = Exec::kParallel);

/// Normalised Gaussian taps for offsets -r..r, r = ceil(3 sigma).
std::vector<double> gaussian_taps(double sigma);

/// Separable convolution with gaussian_taps(sigma); zero outside the grid.
Plane<double> gaussian_blur(const Plane<double>& src, double sigma, Exec exec = Exec::kParallel);

/// Pixel offsets of a box kernel of `length` taps along `angle`, each of
/// weight 1/length. Offsets may repeat.
std::vector<std::pair<int, int>> motion_offsets(int length, double angle);

Image motion_blur(const Image& src, int length, double angle, Exec exec = Exec::kParallel);

/// logits[i*k + c] = bias[c] + sum_d x[i*d + dd] * w[dd*k + c], with the bias
/// in the last row of the (dim + 1) x k weight matrix.
void affine_logits(std::span<const float> x, std::size_t n, std::size_t dim,
                   std::span<const double> w, std::size_t k, std::span<double> logits,
                   Exec exec = Exec::kParallel);

/// grad[dd*k + c] = sum_i xa[i][dd] * delta[i*k + c] / n with xa the features
/// augmented by a trailing 1. Overwrites grad.
void affine_gradient(std::span<const float> x, std::size_t n, std::size_t dim,
                     std::span<const double> delta, std::size_t k, std::span<double> grad,
                     Exec exec = Exec::kParallel);

/// One Gauss-Seidel pass over the 5-point system
///   4 f_p - sum_{q in N(p)} f_q = guidance_p   for interior p,
/// where non-interior pixels of f hold fixed Dirichlet values. Interior
/// pixels never touch the grid border. The serial path sweeps in scanline
/// order, the parallel path in red-black order.
void gauss_seidel_sweep(Plane<double>& f, const Plane<double>& guidance, const Mask& interior,
                        Exec exec = Exec::kParallel);

}  // namespace ctxaug::kernels
