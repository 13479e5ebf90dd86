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

#include "dmt/core/probability.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "dmt/core/error.hpp"
#include "dmt/pseudo/types.hpp"

namespace dmt {

template <std::floating_point T>
void softmax(std::span<const T> logits, std::span<T> out) {
  const T top = *std::max_element(logits.begin(), logits.end());
  T sum = 0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] - top);
    sum += out[c];
  }
  for (std::size_t c = 0; c < logits.size(); ++c) out[c] /= sum;
}

template void softmax<float>(std::span<const float>, std::span<float>);
template void softmax<double>(std::span<const double>, std::span<double>);

void validate_probabilities(std::span<const double> probs) {
  if (probs.empty()) throw ValidationError("probability vector is empty");
  double sum = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double p = probs[c];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError(fmt::format("probability[{}] = {} outside [0, 1]", c, p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    throw ValidationError(fmt::format("probabilities sum to {}, expected 1", sum));
  }
}

ProbabilityVector::ProbabilityVector(std::vector<double> probs) : probs_(std::move(probs)) {
  validate_probabilities(probs_);
}

ProbabilityVector ProbabilityVector::from_logits(std::span<const double> logits) {
  std::vector<double> probs(logits.size());
  softmax<double>(logits, probs);
  return ProbabilityVector(std::move(probs));
}

std::vector<double> ProbabilityMap::pixel_vector(std::size_t pixel) const {
  std::vector<double> v(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) v[c] = at(c, pixel);
  return v;
}

void validate_pseudo_map(const PseudoLabelMap& map) {
  const std::size_t n = map.pixels();
  if (map.labels.size() != n || map.confidences.size() != n) {
    throw ValidationError(fmt::format("pseudo-label map '{}' has {} labels and {} confidences for {}x{}",
                                      map.sample_id, map.labels.size(), map.confidences.size(),
                                      map.height, map.width));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!map.ignored(i) && !(map.confidences[i] > 0.0f)) {
      throw ValidationError(
          fmt::format("pseudo-label map '{}': pixel {} is labeled with confidence {}",
                      map.sample_id, i, map.confidences[i]));
    }
  }
}

}  // namespace dmt
