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

#include "dmt/nn/optimizer.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "dmt/core/error.hpp"

namespace dmt::nn {

LrSchedule parse_lr_schedule(const std::string& name) {
  if (name == "constant") return LrSchedule::Constant;
  if (name == "cosine") return LrSchedule::Cosine;
  if (name == "poly") return LrSchedule::Poly;
  throw ConfigError(fmt::format("unknown learning-rate schedule '{}'", name));
}

const char* to_string(LrSchedule s) {
  switch (s) {
    case LrSchedule::Constant: return "constant";
    case LrSchedule::Cosine: return "cosine";
    case LrSchedule::Poly: return "poly";
  }
  return "unknown";
}

double scheduled_lr(double base_lr, std::size_t step, std::size_t total_steps, LrSchedule schedule,
                    double poly_power) {
  if (total_steps == 0) return base_lr;
  const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  switch (schedule) {
    case LrSchedule::Constant: return base_lr;
    case LrSchedule::Cosine: return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * progress));
    case LrSchedule::Poly: return base_lr * std::pow(1.0 - progress, poly_power);
  }
  return base_lr;
}

Sgd::Sgd(std::size_t parameter_count, SgdOptions options)
    : options_(options), velocity_(parameter_count, 0.0f) {}

void Sgd::step(std::span<float> params, std::span<const float> grads, double learning_rate) {
  if (params.size() != velocity_.size() || grads.size() != velocity_.size()) {
    throw ValidationError("optimizer state does not match the parameter count");
  }
  const auto mu = static_cast<float>(options_.momentum);
  const auto wd = static_cast<float>(options_.weight_decay);
  const auto lr = static_cast<float>(learning_rate);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const float g = grads[i] + wd * params[i];
    velocity_[i] = mu * velocity_[i] + g;
    params[i] -= lr * velocity_[i];
  }
}

}  // namespace dmt::nn
