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

#include "dmt/core/mixup.hpp"

#include <fmt/format.h>

#include "dmt/core/error.hpp"

namespace dmt {

MixupBatch mixup_batch(const MixupBatch& batch, std::span<const std::size_t> pairing,
                       double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ValidationError(fmt::format("mixup lambda {} outside [0, 1]", lambda));
  }
  if (pairing.size() != batch.rows || batch.inputs.size() != batch.rows * batch.input_dim ||
      batch.targets.size() != batch.rows * batch.num_classes || batch.weights.size() != batch.rows) {
    throw ValidationError("mixup arrays are not aligned");
  }
  const auto a = static_cast<float>(lambda);
  const float b = 1.0f - a;
  MixupBatch out = batch;
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const std::size_t j = pairing[i];
    if (j >= batch.rows) throw IndexError(fmt::format("mixup partner {} out of range", j));
    for (std::size_t k = 0; k < batch.input_dim; ++k) {
      out.inputs[i * batch.input_dim + k] =
          a * batch.inputs[i * batch.input_dim + k] + b * batch.inputs[j * batch.input_dim + k];
    }
    for (std::size_t k = 0; k < batch.num_classes; ++k) {
      out.targets[i * batch.num_classes + k] = a * batch.targets[i * batch.num_classes + k] +
                                               b * batch.targets[j * batch.num_classes + k];
    }
    out.weights[i] = a * batch.weights[i] + b * batch.weights[j];
  }
  return out;
}

double draw_mixup_lambda(std::mt19937_64& rng, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("mixup alpha must be positive");
  std::gamma_distribution<double> g(alpha, 1.0);
  const double x = g(rng);
  const double y = g(rng);
  return x / (x + y);
}

}  // namespace dmt
