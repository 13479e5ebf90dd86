// Copyright 2026 The DMT Authors. All Rights Reserved.
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

#include "dmt/train/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "dmt/core/error.hpp"
#include "dmt/core/probability.hpp"

namespace dmt::train {

namespace {

enum class ImageOp { Identity, Brightness, Contrast, TranslateX, TranslateY, Flip, Rotate, Count };

struct Geometry {
  std::size_t c, h, w;
};

Geometry geometry_of(const nn::Shape& s) {
  if (s.size() != 3) throw ValidationError("image augmentation needs CxHxW samples");
  return {s[0], s[1], s[2]};
}

// Resamples by nearest neighbour: out(y, x) = in(src(y, x)), or the pad
// value when src falls outside the image.
template <typename Src>
void remap(const Geometry& g, std::span<float> image, std::vector<std::uint8_t>* mask,
           std::vector<float>* aux, Src src) {
  const std::vector<float> img(image.begin(), image.end());
  const std::vector<std::uint8_t> m = mask ? *mask : std::vector<std::uint8_t>{};
  const std::vector<float> a = aux ? *aux : std::vector<float>{};
  for (std::size_t y = 0; y < g.h; ++y) {
    for (std::size_t x = 0; x < g.w; ++x) {
      const auto [sy, sx] = src(static_cast<double>(y), static_cast<double>(x));
      const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<long>(g.h) && sx < static_cast<long>(g.w);
      const std::size_t from = inside ? static_cast<std::size_t>(sy) * g.w + static_cast<std::size_t>(sx) : 0;
      const std::size_t to = y * g.w + x;
      for (std::size_t ch = 0; ch < g.c; ++ch) {
        image[ch * g.h * g.w + to] = inside ? img[ch * g.h * g.w + from] : 0.0f;
      }
      if (mask) (*mask)[to] = inside ? m[from] : static_cast<std::uint8_t>(kIgnored);
      if (aux) (*aux)[to] = inside ? a[from] : 0.0f;
    }
  }
}

void image_op(const Geometry& g, std::span<float> image, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(ImageOp::Count) - 1);
  const auto op = static_cast<ImageOp>(pick(rng));
  const double m = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  const std::size_t plane = g.h * g.w;
  switch (op) {
    case ImageOp::Identity:
      break;
    case ImageOp::Brightness:
      for (auto& v : image) v += static_cast<float>(0.3 * m);
      break;
    case ImageOp::Contrast:
      for (std::size_t ch = 0; ch < g.c; ++ch) {
        auto p = image.subspan(ch * plane, plane);
        double mean = 0;
        for (auto v : p) mean += v;
        mean /= static_cast<double>(plane);
        for (auto& v : p) v = static_cast<float>(mean + (v - mean) * (1.0 + 0.5 * m));
      }
      break;
    case ImageOp::TranslateX:
    case ImageOp::TranslateY: {
      const long shift = std::lround(0.25 * m * static_cast<double>(op == ImageOp::TranslateX ? g.w : g.h));
      remap(g, image, nullptr, nullptr, [&](double y, double x) {
        return op == ImageOp::TranslateX ? std::pair<long, long>{static_cast<long>(y), static_cast<long>(x) - shift}
                                         : std::pair<long, long>{static_cast<long>(y) - shift, static_cast<long>(x)};
      });
      break;
    }
    case ImageOp::Flip:
      flip_horizontal({g.c, g.h, g.w}, image, nullptr, nullptr);
      break;
    case ImageOp::Rotate: {
      const double angle = m * std::numbers::pi / 6.0;
      const double cy = (static_cast<double>(g.h) - 1) / 2, cx = (static_cast<double>(g.w) - 1) / 2;
      const double cs = std::cos(angle), sn = std::sin(angle);
      remap(g, image, nullptr, nullptr, [&](double y, double x) {
        const double dy = y - cy, dx = x - cx;
        return std::pair<long, long>{std::lround(cy + cs * dy - sn * dx), std::lround(cx + sn * dy + cs * dx)};
      });
      break;
    }
    case ImageOp::Count:
      break;
  }
}

}  // namespace

Augmentation parse_augmentation(const std::string& name) {
  for (auto a : {Augmentation::None, Augmentation::Jitter, Augmentation::RandomOpCutout,
                 Augmentation::ScaleCropFlip}) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError(fmt::format("unknown augmentation '{}'", name));
}

const char* to_string(Augmentation a) {
  switch (a) {
    case Augmentation::None: return "none";
    case Augmentation::Jitter: return "jitter";
    case Augmentation::RandomOpCutout: return "random-op-cutout";
    case Augmentation::ScaleCropFlip: return "scale-crop-flip";
  }
  return "unknown";
}

void apply_cutout(const nn::Shape& sample_shape, std::span<float> image, std::size_t cy,
                  std::size_t cx) {
  const auto g = geometry_of(sample_shape);
  const std::size_t half_h = g.h / 4, half_w = g.w / 4;
  const std::size_t y0 = cy > half_h ? cy - half_h : 0, y1 = std::min(g.h, cy + half_h);
  const std::size_t x0 = cx > half_w ? cx - half_w : 0, x1 = std::min(g.w, cx + half_w);
  for (std::size_t ch = 0; ch < g.c; ++ch) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = x0; x < x1; ++x) image[(ch * g.h + y) * g.w + x] = 0.0f;
    }
  }
}

void flip_horizontal(const nn::Shape& sample_shape, std::span<float> image,
                     std::vector<std::uint8_t>* mask, std::vector<float>* aux) {
  const auto g = geometry_of(sample_shape);
  for (std::size_t y = 0; y < g.h; ++y) {
    for (std::size_t x = 0; x < g.w / 2; ++x) {
      const std::size_t a = y * g.w + x, b = y * g.w + (g.w - 1 - x);
      for (std::size_t ch = 0; ch < g.c; ++ch) std::swap(image[ch * g.h * g.w + a], image[ch * g.h * g.w + b]);
      if (mask) std::swap((*mask)[a], (*mask)[b]);
      if (aux) std::swap((*aux)[a], (*aux)[b]);
    }
  }
}

void augment_sample(Augmentation pipeline, const nn::Shape& sample_shape, std::span<float> image,
                    std::vector<std::uint8_t>* mask, std::vector<float>* aux, std::mt19937_64& rng,
                    float jitter_std) {
  switch (pipeline) {
    case Augmentation::None:
      return;
    case Augmentation::Jitter: {
      std::normal_distribution<float> noise(0.0f, jitter_std);
      for (auto& v : image) v += noise(rng);
      return;
    }
    case Augmentation::RandomOpCutout: {
      const auto g = geometry_of(sample_shape);
      image_op(g, image, rng);
      const std::size_t cy = std::uniform_int_distribution<std::size_t>(0, g.h - 1)(rng);
      const std::size_t cx = std::uniform_int_distribution<std::size_t>(0, g.w - 1)(rng);
      apply_cutout(sample_shape, image, cy, cx);
      return;
    }
    case Augmentation::ScaleCropFlip: {
      const auto g = geometry_of(sample_shape);
      const double s = std::uniform_real_distribution<double>(kMinScale, kMaxScale)(rng);
      const auto sh = static_cast<long>(std::lround(s * static_cast<double>(g.h)));
      const auto sw = static_cast<long>(std::lround(s * static_cast<double>(g.w)));
      // Crop window in scaled coordinates; a scaled image smaller than the
      // window is padded around its origin.
      const long oy = std::uniform_int_distribution<long>(std::min(0L, sh - static_cast<long>(g.h)),
                                                          std::max(0L, sh - static_cast<long>(g.h)))(rng);
      const long ox = std::uniform_int_distribution<long>(std::min(0L, sw - static_cast<long>(g.w)),
                                                          std::max(0L, sw - static_cast<long>(g.w)))(rng);
      remap(g, image, mask, aux, [&](double y, double x) {
        const double ys = y + static_cast<double>(oy), xs = x + static_cast<double>(ox);
        if (ys < 0 || xs < 0 || ys >= static_cast<double>(sh) || xs >= static_cast<double>(sw)) {
          return std::pair<long, long>{-1, -1};
        }
        return std::pair<long, long>{static_cast<long>(ys / s), static_cast<long>(xs / s)};
      });
      if (std::bernoulli_distribution(0.5)(rng)) flip_horizontal(sample_shape, image, mask, aux);
      return;
    }
  }
}

}  // namespace dmt::train
