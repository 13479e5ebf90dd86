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

#include "dmt/nn/tensor.hpp"

#include <fmt/format.h>

#include "dmt/core/error.hpp"
#include "dmt/core/probability.hpp"

namespace dmt::nn {

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ValidationError(fmt::format("tensor data has {} values, shape needs {}", data_.size(),
                                      shape_size(shape_)));
  }
}

Tensor softmax_channels(const Tensor& logits) {
  if (logits.rank() < 2) throw ValidationError("softmax needs a [N, C, ...] tensor");
  const std::size_t n = logits.dim(0);
  const std::size_t c = logits.dim(1);
  const std::size_t inner = logits.sample_size() / c;
  Tensor out(logits.shape());
  std::vector<float> row(c);
  std::vector<float> prob(c);
  for (std::size_t i = 0; i < n; ++i) {
    const float* src = logits.data() + i * c * inner;
    float* dst = out.data() + i * c * inner;
    for (std::size_t p = 0; p < inner; ++p) {
      for (std::size_t k = 0; k < c; ++k) row[k] = src[k * inner + p];
      softmax<float>(row, prob);
      for (std::size_t k = 0; k < c; ++k) dst[k * inner + p] = prob[k];
    }
  }
  return out;
}

}  // namespace dmt::nn
