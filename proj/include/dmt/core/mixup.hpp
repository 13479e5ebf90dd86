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
#include <random>
#include <span>
#include <vector>

namespace dmt {

// Row-aligned batch for mixup: inputs [rows][input_dim], one-hot or soft
// targets [rows][num_classes] and one dynamic weight per row.
struct MixupBatch {
  std::size_t rows = 0;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::vector<float> inputs;
  std::vector<float> targets;
  std::vector<float> weights;
};

// lambda * row + (1 - lambda) * partner row, applied to inputs, targets and
// weights alike. pairing[i] is the partner of row i.
MixupBatch mixup_batch(const MixupBatch& batch, std::span<const std::size_t> pairing,
                       double lambda);

// lambda ~ Beta(alpha, alpha).
double draw_mixup_lambda(std::mt19937_64& rng, double alpha);

}  // namespace dmt
