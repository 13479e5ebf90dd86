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

#include "dmt/core/gamma_schedule.hpp"

#include <cmath>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dmt/core/error.hpp"

namespace dmt {

double gamma_schedule(double step, double total_steps, double gamma_max, ScheduleSign sign) {
  if (!(total_steps > 0.0)) {
    throw ValidationError(fmt::format("gamma schedule needs t_max > 0, got {}", total_steps));
  }
  if (!(step >= 0.0)) throw ValidationError(fmt::format("gamma schedule step {} < 0", step));
  if (!(gamma_max >= 0.0)) throw ValidationError("gamma_max must be non-negative");
  if (step > total_steps) {
    spdlog::warn("gamma schedule step {} exceeds t_max {}; clamping", step, total_steps);
    step = total_steps;
  }
  const double r = 1.0 - step / total_steps;
  return gamma_max * std::exp(static_cast<double>(static_cast<int>(sign)) * 5.0 * r * r);
}

}  // namespace dmt
