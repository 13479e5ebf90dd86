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

#include "dmt/train/dataset.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "dmt/core/error.hpp"

namespace dmt::train {

const char* to_string(Task t) {
  return t == Task::Classification ? "classification" : "segmentation";
}

std::size_t Dataset::size() const {
  return sample_size() == 0 ? 0 : inputs.size() / sample_size();
}

nn::Tensor Dataset::gather(std::span<const std::size_t> ids) const {
  nn::Shape shape{ids.size()};
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  nn::Tensor out(shape);
  const std::size_t s = sample_size();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= size()) throw IndexError(fmt::format("sample {} out of range", ids[i]));
    std::copy_n(inputs.begin() + static_cast<std::ptrdiff_t>(ids[i] * s), s, out.data() + i * s);
  }
  return out;
}

void Dataset::validate() const {
  if (sample_size() == 0 || inputs.size() % sample_size() != 0) {
    throw ValidationError(fmt::format("dataset '{}': inputs do not divide into samples", name));
  }
  const std::size_t n = size();
  if (task == Task::Classification) {
    if (labels.size() != n) throw ValidationError(fmt::format("dataset '{}': label count", name));
    for (auto l : labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
        throw IndexError(fmt::format("dataset '{}': label {} out of range", name, l));
      }
    }
  } else {
    if (sample_shape.size() != 3) {
      throw ValidationError(fmt::format("dataset '{}': segmentation samples must be CxHxW", name));
    }
    if (masks.size() != n) throw ValidationError(fmt::format("dataset '{}': mask count", name));
    for (const auto& m : masks) {
      if (m.size() != pixels()) throw ValidationError(fmt::format("dataset '{}': mask size", name));
      for (auto v : m) {
        if (v != kIgnored && v >= num_classes) {
          throw IndexError(fmt::format("dataset '{}': mask value {} out of range", name, v));
        }
      }
    }
  }
}

}  // namespace dmt::train
