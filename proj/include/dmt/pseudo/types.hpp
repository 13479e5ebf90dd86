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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dmt/core/probability.hpp"

namespace dmt {

// Hard pseudo label for one sample, produced by a frozen model.
struct PseudoLabelRecord {
  std::string sample_id;
  ClassIndex label = kIgnored;
  double confidence = 0.0;
  std::string source_model;
  int iteration = 1;

  bool ignored() const { return label == kIgnored; }
  friend bool operator==(const PseudoLabelRecord&, const PseudoLabelRecord&) = default;
};

// Per-pixel pseudo labels for one image. labels holds class indices with
// 255 for ignored pixels; confidences keeps the source model's max
// probability for every pixel, selected or not.
struct PseudoLabelMap {
  std::string sample_id;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;
  std::vector<float> confidences;
  std::string source_model;
  int iteration = 1;

  std::size_t pixels() const { return height * width; }
  bool ignored(std::size_t pixel) const { return labels[pixel] == kIgnored; }
  friend bool operator==(const PseudoLabelMap&, const PseudoLabelMap&) = default;
};

// Throws ValidationError when shapes disagree or a selected pixel has
// non-positive confidence.
void validate_pseudo_map(const PseudoLabelMap& map);

}  // namespace dmt
