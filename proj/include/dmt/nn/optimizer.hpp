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

#include <span>
#include <string>
#include <vector>

namespace dmt::nn {

enum class LrSchedule { Constant, Cosine, Poly };

LrSchedule parse_lr_schedule(const std::string& name);
const char* to_string(LrSchedule s);

// Learning rate at step of total_steps under the schedule.
double scheduled_lr(double base_lr, std::size_t step, std::size_t total_steps, LrSchedule schedule,
                    double poly_power = 0.9);

struct SgdOptions {
  double momentum = 0.9;
  double weight_decay = 0.0;
};

// Stochastic gradient descent with heavy-ball momentum and L2 decay.
class Sgd {
 public:
  Sgd(std::size_t parameter_count, SgdOptions options);
  void step(std::span<float> params, std::span<const float> grads, double learning_rate);

 private:
  SgdOptions options_;
  std::vector<float> velocity_;
};

}  // namespace dmt::nn
