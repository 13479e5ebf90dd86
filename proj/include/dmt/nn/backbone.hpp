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

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dmt/nn/layers.hpp"
#include "dmt/nn/tensor.hpp"

namespace dmt::nn {

// Architecture description, e.g. "in=2:d32-d32-o2" or
// "in=3x32x32:c16-p-c32-p-c64-g-o10". Tokens: d<N> dense+relu, c<N> 3x3
// conv+relu, p 2x2 max pool, u 2x nearest upsample, g global average pool,
// o<N> dense output, k<N> 1x1 conv output.
struct ArchSpec {
  Shape input;
  std::vector<std::string> tokens;

  static ArchSpec parse(const std::string& text);
  std::string to_string() const;
  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

// Activations kept by a training forward pass for the backward pass.
struct ForwardPass {
  std::vector<Tensor> activations;  // activations[0] is the input
  const Tensor& logits() const { return activations.back(); }
};

// Contract every model must satisfy for the trainers.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual const ArchSpec& arch() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual Tensor logits(const Tensor& inputs) const = 0;
  virtual ForwardPass forward(const Tensor& inputs) const = 0;
  // Accumulates into gradients() the parameter gradient for grad_logits.
  virtual void backward(const ForwardPass& pass, const Tensor& grad_logits) = 0;

  virtual std::span<float> parameters() = 0;
  virtual std::span<const float> parameters() const = 0;
  virtual std::span<float> gradients() = 0;
  virtual void zero_grad() = 0;
  virtual std::unique_ptr<Backbone> clone() const = 0;

  // Per-class probabilities, softmax over dimension 1.
  Tensor predict_proba(const Tensor& inputs) const { return softmax_channels(logits(inputs)); }
};

class SequentialBackbone final : public Backbone {
 public:
  SequentialBackbone(ArchSpec arch, std::uint64_t seed);

  const ArchSpec& arch() const override { return arch_; }
  std::size_t num_classes() const override { return num_classes_; }
  Tensor logits(const Tensor& inputs) const override;
  ForwardPass forward(const Tensor& inputs) const override;
  void backward(const ForwardPass& pass, const Tensor& grad_logits) override;

  std::span<float> parameters() override { return params_; }
  std::span<const float> parameters() const override { return params_; }
  std::span<float> gradients() override { return grads_; }
  void zero_grad() override;
  std::unique_ptr<Backbone> clone() const override;

 private:
  void check_input(const Tensor& inputs) const;

  ArchSpec arch_;
  std::vector<std::shared_ptr<const Layer>> layers_;
  std::vector<Shape> input_shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> counts_;
  std::vector<float> params_;
  std::vector<float> grads_;
  std::size_t num_classes_ = 0;
};

std::unique_ptr<Backbone> make_backbone(const std::string& arch, std::uint64_t seed);

// Versioned checkpoint: magic "DMTC", u32 version, arch string, parameters,
// and optional named float blobs (e.g. an EMA shadow).
struct Checkpoint {
  std::string arch;
  std::vector<float> parameters;
  std::vector<std::pair<std::string, std::vector<float>>> extras;

  const std::vector<float>* extra(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint to_checkpoint(const Backbone& model);
std::unique_ptr<Backbone> from_checkpoint(const Checkpoint& ckpt);

}  // namespace dmt::nn
