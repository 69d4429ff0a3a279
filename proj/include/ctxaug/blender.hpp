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

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctxaug/geometry.hpp"
#include "ctxaug/image.hpp"
#include "ctxaug/instance_bank.hpp"
#include "ctxaug/kernels.hpp"
#include "ctxaug/rng.hpp"

namespace ctxaug {

struct BlendNone {};
/// Alpha ramps linearly from the mask edge to `width` pixels inside.
struct LinearRamp {
  double width = 5.0;
};
/// Mask convolved with a Gaussian of `sigma` pixels.
struct GaussianAlpha {
  double sigma = 2.0;
};
/// Hard paste followed by a box blur of the whole image along `angle`.
struct MotionBlur {
  int length = 5;
  double angle = 0.0;
};
/// Gradient-domain blend (source Laplacian only).
struct PoissonBlend {
  double tol = 1e-3;
  int max_iter = 20000;
};
/// Uniform draw among None, LinearRamp, GaussianAlpha and MotionBlur.
struct RandomBlend {};

using BlendMethod =
    std::variant<BlendNone, LinearRamp, GaussianAlpha, MotionBlur, PoissonBlend, RandomBlend>;

std::string blend_name(const BlendMethod& method);
/// Accepts none | linear | gaussian | motion | poisson | random.
BlendMethod parse_blend(std::string_view name);
void validate(const BlendMethod& method);

/// Resolves RandomBlend to a concrete method (motion length in [3, 9],
/// angle in [0, pi)); other methods are returned unchanged.
BlendMethod resolve_blend(const BlendMethod& method, Rng& rng);

/// alpha = clamp(d / width, 0, 1), d = distance from the pixel centre to the
/// mask boundary (distance to the nearest outside pixel centre minus 0.5).
AlphaMap linear_alpha(const Mask& mask, double width,
                      kernels::Exec exec = kernels::Exec::kParallel);

AlphaMap gaussian_alpha(const Mask& mask, double sigma,
                        kernels::Exec exec = kernels::Exec::kParallel);

/// Alpha equal to the mask.
AlphaMap hard_alpha(const Mask& mask);

/// out = alpha * src + (1 - alpha) * bg over the src footprint at (x, y),
/// rounded half-up. src is RGB or RGBA (its alpha channel is ignored).
Image alpha_composite(const Image& background, const Image& src, const AlphaMap& alpha, int x,
                      int y);

/// A cutout resampled to round(w * scale) x round(h * scale).
struct ScaledCutout {
  Image rgb;
  Mask mask;
};
ScaledCutout scale_cutout(const InstanceCutout& cutout, double scale);

/// Top-left corner that centres a w x h patch in box, clamped into the image.
std::pair<int, int> centred_origin(const BoundingBox& box, int w, int h, int image_w, int image_h);

inline Image motion_blur(const Image& image, int length, double angle) {
  return kernels::motion_blur(image, length, angle);
}

/// Discrete Poisson problem on one channel: 4 f_p - sum_{q in N(p)} f_q =
/// 4 g_p - sum_q g_q on interior pixels, f = background elsewhere. Interior is
/// the mask minus the image border.
class PoissonSystem {
 public:
  PoissonSystem(const Plane<double>& background, const Plane<double>& source, const Mask& mask);

  const Mask& interior() const noexcept { return interior_; }
  const Plane<double>& guidance() const noexcept { return guidance_; }
  std::size_t unknowns() const noexcept { return cells_.size(); }

  /// Background outside, source inside.
  Plane<double> initial_guess(const Plane<double>& source) const;

  /// max_p |guidance_p - (4 f_p - sum_q f_q)| over interior pixels.
  double residual_inf(const Plane<double>& f) const;
  /// 1/2 x^T A x - x^T b over the interior unknowns x.
  double energy(const Plane<double>& f) const;

  void gauss_seidel(Plane<double>& f, int sweeps,
                    kernels::Exec exec = kernels::Exec::kParallel) const;
  /// Returns iterations used; stops when residual_inf <= tol.
  int conjugate_gradient(Plane<double>& f, double tol, int max_iter) const;

 private:
  void apply(const std::vector<double>& x, std::vector<double>& out) const;

  Mask interior_;
  Plane<double> guidance_;
  Plane<double> boundary_;  // Dirichlet values
  std::vector<std::pair<int, int>> cells_;
  Plane<int> cell_index_;
};

enum class PoissonSolver { kConjugateGradient, kGaussSeidel };

struct PoissonResult {
  Image image;
  std::vector<Plane<double>> solution;  // unclamped, one plane per channel
  bool converged = true;
  int iterations = 0;
  double residual = 0.0;
};

/// Solves per channel and clamps to [0, 255]. Non-convergence sets
/// converged = false rather than failing.
PoissonResult poisson_blend(const Image& background, const Image& source, const Mask& mask,
                            double tol, int max_iter,
                            PoissonSolver solver = PoissonSolver::kConjugateGradient);

struct BlendResult {
  Image image;
  BoundingBox box;  // tight box of the pasted pixels
  std::string method;
  bool converged = true;
};

/// Scales the cutout, centres it in box and blends it with `method`.
BlendResult blend(const Image& background, const InstanceCutout& cutout, const BoundingBox& box,
                  double scale, const BlendMethod& method, Rng& rng);

/// Same as blend but with the patch already resampled and positioned at
/// (x, y); parts outside the image are cropped.
BlendResult blend_at(const Image& background, const ScaledCutout& patch, int x, int y,
                     const BlendMethod& method, Rng& rng);

}  // namespace ctxaug
