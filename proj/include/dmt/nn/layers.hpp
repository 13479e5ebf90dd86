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

#include <memory>
#include <random>
#include <span>
#include <string>

#include "dmt/nn/tensor.hpp"

namespace dmt::nn {

// Stateless layer description. Parameters live in the owning backbone's
// flat parameter vector and are passed in as spans; shapes exclude the
// batch dimension.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string token() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual std::size_t parameter_count(const Shape& /*input*/) const { return 0; }
  virtual void initialize(const Shape& /*input*/, std::span<float> /*params*/,
                          std::mt19937_64& /*rng*/) const {}
  virtual Tensor forward(const Tensor& input, std::span<const float> params) const = 0;
  // Returns d(loss)/d(input) and accumulates parameter gradients into grads.
  virtual Tensor backward(const Tensor& input, const Tensor& output, const Tensor& grad_output,
                          std::span<const float> params, std::span<float> grads) const = 0;
};

// Fully connected layer over the flattened sample.
std::shared_ptr<const Layer> make_dense(std::size_t outputs, bool output_layer);
// Stride-1 convolution with same padding; kernel 3 or 1.
std::shared_ptr<const Layer> make_conv(std::size_t channels, std::size_t kernel, bool output_layer);
std::shared_ptr<const Layer> make_relu();
std::shared_ptr<const Layer> make_max_pool2();
std::shared_ptr<const Layer> make_upsample2();
std::shared_ptr<const Layer> make_global_avg_pool();

}  // namespace dmt::nn
