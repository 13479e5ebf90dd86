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

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dmt/nn/tensor.hpp"

namespace dmt::train {

enum class Augmentation {
  None,
  Jitter,          // additive Gaussian noise on vector inputs
  RandomOpCutout,  // one random image operation at random intensity, then cutout
  ScaleCropFlip,   // random scale, crop back to size, horizontal flip
};

Augmentation parse_augmentation(const std::string& name);
const char* to_string(Augmentation a);

inline constexpr float kJitterStd = 0.05f;
inline constexpr double kMinScale = 0.75;
inline constexpr double kMaxScale = 1.5;

// Augments one sample in place. For image samples (CxHxW) the optional
// mask and aux maps (H*W each) receive the same geometric transform; pad
// values are 0 for image and aux and 255 for mask.
void augment_sample(Augmentation pipeline, const nn::Shape& sample_shape, std::span<float> image,
                    std::vector<std::uint8_t>* mask, std::vector<float>* aux, std::mt19937_64& rng,
                    float jitter_std = kJitterStd);

// Square zeroed on every channel, side = half the image side, centered at (cy, cx).
void apply_cutout(const nn::Shape& sample_shape, std::span<float> image, std::size_t cy,
                  std::size_t cx);

// Mirrors columns of image, mask and aux.
void flip_horizontal(const nn::Shape& sample_shape, std::span<float> image,
                     std::vector<std::uint8_t>* mask, std::vector<float>* aux);

}  // namespace dmt::train
