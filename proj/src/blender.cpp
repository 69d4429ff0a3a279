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

#include "ctxaug/blender.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctxaug/error.hpp"

namespace ctxaug {

std::string blend_name(const BlendMethod& method) {
  struct {
    std::string operator()(const BlendNone&) const { return "none"; }
    std::string operator()(const LinearRamp&) const { return "linear"; }
    std::string operator()(const GaussianAlpha&) const { return "gaussian"; }
    std::string operator()(const MotionBlur&) const { return "motion"; }
    std::string operator()(const PoissonBlend&) const { return "poisson"; }
    std::string operator()(const RandomBlend&) const { return "random"; }
  } visitor;
  return std::visit(visitor, method);
}

BlendMethod parse_blend(std::string_view name) {
  if (name == "none") return BlendNone{};
  if (name == "linear") return LinearRamp{};
  if (name == "gaussian") return GaussianAlpha{};
  if (name == "motion") return MotionBlur{};
  if (name == "poisson") return PoissonBlend{};
  if (name == "random") return RandomBlend{};
  throw ValidationError("unknown blend method '" + std::string(name) + "'");
}

void validate(const BlendMethod& method) {
  if (auto* m = std::get_if<LinearRamp>(&method); m && !(m->width >= 1)) {
    throw ValidationError("linear ramp width must be >= 1");
  }
  if (auto* m = std::get_if<GaussianAlpha>(&method); m && !(m->sigma > 0)) {
    throw ValidationError("gaussian sigma must be > 0");
  }
  if (auto* m = std::get_if<MotionBlur>(&method); m && m->length < 1) {
    throw ValidationError("motion blur length must be >= 1");
  }
  if (auto* m = std::get_if<PoissonBlend>(&method); m && (!(m->tol > 0) || m->max_iter < 1)) {
    throw ValidationError("poisson tolerance must be > 0");
  }
}

BlendMethod resolve_blend(const BlendMethod& method, Rng& rng) {
  if (!std::holds_alternative<RandomBlend>(method)) return method;
  switch (rng.below(4)) {
    case 0: return BlendNone{};
    case 1: return LinearRamp{};
    case 2: return GaussianAlpha{};
    default: {
      const int length = 3 + static_cast<int>(rng.below(7));
      return MotionBlur{length, rng.uniform(0.0, std::numbers::pi)};
    }
  }
}

AlphaMap linear_alpha(const Mask& mask, double width, kernels::Exec exec) {
  if (!(width >= 1)) throw ValidationError("linear ramp width must be >= 1");
  const auto sq = kernels::squared_distance_to_outside(mask, exec);
  AlphaMap out(mask.width(), mask.height(), 0.0);
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    if (!mask.data()[i]) continue;
    const double d = std::sqrt(sq.data()[i]) - 0.5;
    out.data()[i] = std::clamp(d / width, 0.0, 1.0);
  }
  return out;
}

AlphaMap gaussian_alpha(const Mask& mask, double sigma, kernels::Exec exec) {
  if (!(sigma > 0)) throw ValidationError("gaussian sigma must be > 0");
  auto out = kernels::gaussian_blur(hard_alpha(mask), sigma, exec);
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

AlphaMap hard_alpha(const Mask& mask) {
  AlphaMap out(mask.width(), mask.height(), 0.0);
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = mask.data()[i] ? 1.0 : 0.0;
  return out;
}

Image alpha_composite(const Image& background, const Image& src, const AlphaMap& alpha, int x,
                      int y) {
  if (alpha.width() != src.width() || alpha.height() != src.height()) {
    throw ValidationError("alpha map does not match the source patch");
  }
  if (x < 0 || y < 0 || x + src.width() > background.width() ||
      y + src.height() > background.height()) {
    throw ValidationError("placement outside the image");
  }
  Image out = background;
  const int ch = std::min(3, background.channels());
  for (int r = 0; r < src.height(); ++r) {
    for (int c = 0; c < src.width(); ++c) {
      const double a = alpha.at(c, r);
      if (a <= 0.0) continue;
      for (int k = 0; k < ch; ++k) {
        const double s = src.at(c, r, std::min(k, src.channels() - 1));
        const double b = background.at(x + c, y + r, k);
        out.at(x + c, y + r, k) = to_u8(a * s + (1.0 - a) * b);
      }
    }
  }
  return out;
}

ScaledCutout scale_cutout(const InstanceCutout& cutout, double scale) {
  if (!(scale > 0)) throw ValidationError("scale must be positive");
  const int w = std::max(1, static_cast<int>(std::lround(cutout.width() * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(cutout.height() * scale)));
  const Image& src = cutout.rgba;
  ScaledCutout out{Image(w, h, 3), Mask(w, h, 0)};
  const double sx = static_cast<double>(src.width()) / w;
  const double sy = static_cast<double>(src.height()) / h;
  // Premultiplied bilinear so transparent pixels do not darken the edge.
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      const double wts[4] = {(1 - wx) * (1 - wy), wx * (1 - wy), (1 - wx) * wy, wx * wy};
      const int xs[4] = {x0, x1, x0, x1};
      const int ys[4] = {y0, y0, y1, y1};
      double a = 0.0, rgb[3] = {0, 0, 0};
      for (int i = 0; i < 4; ++i) {
        const double ai = wts[i] * src.at(xs[i], ys[i], 3);
        a += ai;
        for (int c = 0; c < 3; ++c) rgb[c] += ai * src.at(xs[i], ys[i], c);
      }
      if (a > 0) {
        for (int c = 0; c < 3; ++c) out.rgb.at(x, y, c) = to_u8(rgb[c] / a);
      }
      out.mask.at(x, y) = a >= 127.5 ? 1 : 0;
    }
  }
  return out;
}

std::pair<int, int> centred_origin(const BoundingBox& box, int w, int h, int image_w, int image_h) {
  if (w > image_w || h > image_h) throw ValidationError("placement outside the image");
  const int x = static_cast<int>(std::lround(box.center_x() - 0.5 * w));
  const int y = static_cast<int>(std::lround(box.center_y() - 0.5 * h));
  return {std::clamp(x, 0, image_w - w), std::clamp(y, 0, image_h - h)};
}

// ---------------------------------------------------------------- Poisson

PoissonSystem::PoissonSystem(const Plane<double>& background, const Plane<double>& source,
                             const Mask& mask)
    : interior_(mask.width(), mask.height(), 0),
      guidance_(mask.width(), mask.height(), 0.0),
      boundary_(background),
      cell_index_(mask.width(), mask.height(), -1) {
  const int w = mask.width(), h = mask.height();
  if (background.width() != w || background.height() != h || source.width() != w ||
      source.height() != h) {
    throw ValidationError("poisson inputs differ in size");
  }
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      if (!mask.at(x, y)) continue;
      interior_.at(x, y) = 1;
      cell_index_.at(x, y) = static_cast<int>(cells_.size());
      cells_.emplace_back(x, y);
      guidance_.at(x, y) = 4.0 * source.at(x, y) - source.at(x - 1, y) - source.at(x + 1, y) -
                           source.at(x, y - 1) - source.at(x, y + 1);
    }
  }
}

Plane<double> PoissonSystem::initial_guess(const Plane<double>& source) const {
  Plane<double> f = boundary_;
  for (const auto& [x, y] : cells_) f.at(x, y) = source.at(x, y);
  return f;
}

double PoissonSystem::residual_inf(const Plane<double>& f) const {
  double worst = 0.0;
  for (const auto& [x, y] : cells_) {
    const double lap =
        4.0 * f.at(x, y) - f.at(x - 1, y) - f.at(x + 1, y) - f.at(x, y - 1) - f.at(x, y + 1);
    worst = std::max(worst, std::abs(guidance_.at(x, y) - lap));
  }
  return worst;
}

double PoissonSystem::energy(const Plane<double>& f) const {
  double e = 0.0;
  for (const auto& [x, y] : cells_) {
    double ax = 4.0 * f.at(x, y);
    double b = guidance_.at(x, y);
    const std::pair<int, int> nbrs[4] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
    for (const auto& [nx, ny] : nbrs) {
      if (interior_.at(nx, ny)) {
        ax -= f.at(nx, ny);
      } else {
        b += boundary_.at(nx, ny);
      }
    }
    e += 0.5 * f.at(x, y) * ax - f.at(x, y) * b;
  }
  return e;
}

void PoissonSystem::gauss_seidel(Plane<double>& f, int sweeps, kernels::Exec exec) const {
  for (int i = 0; i < sweeps; ++i) kernels::gauss_seidel_sweep(f, guidance_, interior_, exec);
}

void PoissonSystem::apply(const std::vector<double>& x, std::vector<double>& out) const {
  const auto n = static_cast<std::ptrdiff_t>(cells_.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto [cx, cy] = cells_[i];
    double v = 4.0 * x[i];
    const int nb[4] = {cell_index_.at(cx - 1, cy), cell_index_.at(cx + 1, cy),
                       cell_index_.at(cx, cy - 1), cell_index_.at(cx, cy + 1)};
    for (int j : nb) {
      if (j >= 0) v -= x[j];
    }
    out[i] = v;
  }
}

int PoissonSystem::conjugate_gradient(Plane<double>& f, double tol, int max_iter) const {
  const std::size_t n = cells_.size();
  if (n == 0) return 0;
  std::vector<double> x(n), b(n), r(n), p(n), ap(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [cx, cy] = cells_[i];
    x[i] = f.at(cx, cy);
    double bi = guidance_.at(cx, cy);
    const std::pair<int, int> nbrs[4] = {{cx - 1, cy}, {cx + 1, cy}, {cx, cy - 1}, {cx, cy + 1}};
    for (const auto& [nx, ny] : nbrs) {
      if (!interior_.at(nx, ny)) bi += boundary_.at(nx, ny);
    }
    b[i] = bi;
  }
  auto dot = [](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
  };
  auto inf_norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
  };
  auto true_residual = [&] {
    apply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  };
  true_residual();
  p = r;
  double rr = dot(r, r);
  int it = 0;
  while (inf_norm(r) > tol && it < max_iter) {
    apply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0)) break;
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    ++it;
    if (inf_norm(r) <= tol) {
      // Recurrence drift: confirm with the explicit residual and restart if needed.
      true_residual();
      if (inf_norm(r) <= tol) break;
      p = r;
      rr = dot(r, r);
      continue;
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  for (std::size_t i = 0; i < n; ++i) f.at(cells_[i].first, cells_[i].second) = x[i];
  return it;
}

PoissonResult poisson_blend(const Image& background, const Image& source, const Mask& mask,
                            double tol, int max_iter, PoissonSolver solver) {
  if (!(tol > 0) || max_iter < 1) throw ValidationError("invalid poisson tolerance");
  const int w = background.width(), h = background.height();
  if (source.width() != w || source.height() != h || mask.width() != w || mask.height() != h) {
    throw ValidationError("poisson inputs differ in size");
  }
  const int ch = std::min(3, background.channels());
  PoissonResult result;
  result.image = background;
  for (int c = 0; c < ch; ++c) {
    Plane<double> bg(w, h), src(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        bg.at(x, y) = background.at(x, y, c);
        src.at(x, y) = source.at(x, y, std::min(c, source.channels() - 1));
      }
    }
    const PoissonSystem system(bg, src, mask);
    if (system.unknowns() == 0) throw ValidationError("poisson mask has no interior pixels");
    Plane<double> f = system.initial_guess(src);
    int iters = 0;
    if (solver == PoissonSolver::kConjugateGradient) {
      iters = system.conjugate_gradient(f, tol, max_iter);
    } else {
      while (iters < max_iter && system.residual_inf(f) > tol) {
        system.gauss_seidel(f, 1);
        ++iters;
      }
    }
    const double res = system.residual_inf(f);
    result.converged = result.converged && res <= tol;
    result.residual = std::max(result.residual, res);
    result.iterations = std::max(result.iterations, iters);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (system.interior().at(x, y)) result.image.at(x, y, c) = to_u8(f.at(x, y));
      }
    }
    result.solution.push_back(std::move(f));
  }
  return result;
}

// ---------------------------------------------------------------- dispatch

BlendResult blend_at(const Image& background, const ScaledCutout& patch, int x, int y,
                     const BlendMethod& method_in, Rng& rng) {
  const BlendMethod method = resolve_blend(method_in, rng);
  validate(method);
  // Crop the patch to the image.
  const int cx0 = std::max(0, -x), cy0 = std::max(0, -y);
  const int cx1 = std::min(patch.rgb.width(), background.width() - x);
  const int cy1 = std::min(patch.rgb.height(), background.height() - y);
  if (cx1 <= cx0 || cy1 <= cy0) throw ValidationError("placement outside the image");
  const bool cropped =
      cx0 > 0 || cy0 > 0 || cx1 < patch.rgb.width() || cy1 < patch.rgb.height();
  const Image rgb = cropped ? crop(patch.rgb, cx0, cy0, cx1 - cx0, cy1 - cy0) : patch.rgb;
  Mask mask = patch.mask;
  if (cropped) {
    Mask m(cx1 - cx0, cy1 - cy0);
    for (int r = cy0; r < cy1; ++r) {
      for (int c = cx0; c < cx1; ++c) m.at(c - cx0, r - cy0) = patch.mask.at(c, r);
    }
    mask = std::move(m);
  }
  const int px = x + cx0, py = y + cy0;

  int bx0 = mask.width(), by0 = mask.height(), bx1 = -1, by1 = -1;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask.at(c, r)) continue;
      bx0 = std::min(bx0, c);
      by0 = std::min(by0, r);
      bx1 = std::max(bx1, c);
      by1 = std::max(by1, r);
    }
  }
  if (bx1 < 0) throw ValidationError("pasted instance has no visible pixels");
  BlendResult out{Image{}, BoundingBox(px + bx0, py + by0, px + bx1 + 1, py + by1 + 1),
                  blend_name(method), true};

  if (std::holds_alternative<BlendNone>(method)) {
    out.image = alpha_composite(background, rgb, hard_alpha(mask), px, py);
  } else if (auto* m = std::get_if<LinearRamp>(&method)) {
    out.image = alpha_composite(background, rgb, linear_alpha(mask, m->width), px, py);
  } else if (auto* m = std::get_if<GaussianAlpha>(&method)) {
    out.image = alpha_composite(background, rgb, gaussian_alpha(mask, m->sigma), px, py);
  } else if (auto* m = std::get_if<MotionBlur>(&method)) {
    out.image = kernels::motion_blur(alpha_composite(background, rgb, hard_alpha(mask), px, py),
                                     m->length, m->angle);
  } else if (auto* m = std::get_if<PoissonBlend>(&method)) {
    const Image source = alpha_composite(background, rgb, hard_alpha(mask), px, py);
    Mask full(background.width(), background.height(), 0);
    for (int r = 0; r < mask.height(); ++r) {
      for (int c = 0; c < mask.width(); ++c) full.at(px + c, py + r) = mask.at(c, r);
    }
    auto res = poisson_blend(background, source, full, m->tol, m->max_iter);
    out.image = std::move(res.image);
    out.converged = res.converged;
  }
  return out;
}

BlendResult blend(const Image& background, const InstanceCutout& cutout, const BoundingBox& box,
                  double scale, const BlendMethod& method, Rng& rng) {
  const ScaledCutout patch = scale_cutout(cutout, scale);
  const auto [x, y] = centred_origin(box, patch.rgb.width(), patch.rgb.height(),
                                     background.width(), background.height());
  return blend_at(background, patch, x, y, method, rng);
}

}  // namespace ctxaug
