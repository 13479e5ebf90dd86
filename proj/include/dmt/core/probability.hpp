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

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dmt {

using ClassIndex = std::int32_t;

// Distinguished label for samples/pixels excluded from training and scoring.
inline constexpr ClassIndex kIgnored = 255;

inline constexpr double kProbabilitySumTolerance = 1e-5;

// Index of the largest entry; ties resolve to the lowest index.
template <std::floating_point T>
ClassIndex argmax(std::span<const T> probs) {
  ClassIndex best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[static_cast<std::size_t>(best)]) best = static_cast<ClassIndex>(c);
  }
  return best;
}

// Numerically stable softmax of one row of logits.
template <std::floating_point T>
void softmax(std::span<const T> logits, std::span<T> out);

// Per-class probabilities for one sample. Construction validates the
// invariants (entries in [0,1], sum to 1 within kProbabilitySumTolerance).
class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> probs);

  static ProbabilityVector from_logits(std::span<const double> logits);

  std::size_t num_classes() const { return probs_.size(); }
  double operator[](std::size_t c) const { return probs_[c]; }
  std::span<const double> values() const { return probs_; }

  ClassIndex argmax() const { return dmt::argmax<double>(probs_); }
  double max() const { return probs_[static_cast<std::size_t>(argmax())]; }

 private:
  std::vector<double> probs_;
};

// Throws ValidationError if probs violates the ProbabilityVector invariants.
void validate_probabilities(std::span<const double> probs);

// Per-pixel probabilities for one image, laid out class-major: [C][H][W].
struct ProbabilityMap {
  std::size_t num_classes = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> probs;

  std::size_t pixels() const { return height * width; }
  float at(std::size_t c, std::size_t pixel) const { return probs[c * pixels() + pixel]; }
  // Gathers the class vector of one pixel.
  std::vector<double> pixel_vector(std::size_t pixel) const;
};

}  // namespace dmt
