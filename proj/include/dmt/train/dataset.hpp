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
#include <span>
#include <string>
#include <vector>

#include "dmt/core/probability.hpp"
#include "dmt/nn/tensor.hpp"

namespace dmt::train {

enum class Task { Classification, Segmentation };

const char* to_string(Task t);

// In-memory dataset. Inputs are float samples of sample_shape laid out
// back to back; classification uses labels, segmentation uses masks
// (one H*W byte mask per sample, 255 = ignore).
struct Dataset {
  std::string name;
  Task task = Task::Classification;
  std::size_t num_classes = 0;
  nn::Shape sample_shape;
  std::vector<float> inputs;
  std::vector<ClassIndex> labels;
  std::vector<std::vector<std::uint8_t>> masks;

  std::size_t size() const;
  std::size_t sample_size() const { return nn::shape_size(sample_shape); }
  std::size_t height() const { return sample_shape.at(1); }
  std::size_t width() const { return sample_shape.at(2); }
  std::size_t pixels() const { return height() * width(); }
  std::span<const float> input(std::size_t i) const {
    return std::span<const float>(inputs).subspan(i * sample_size(), sample_size());
  }
  // Stacks the inputs of ids into a [n, ...sample_shape] tensor.
  nn::Tensor gather(std::span<const std::size_t> ids) const;

  // Throws ValidationError when sizes or labels are inconsistent.
  void validate() const;
};

struct DataBundle {
  Dataset train;
  Dataset test;
};

}  // namespace dmt::train
