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

namespace dmt {

// Sign of the exponent in the gamma ramp. Positive starts high and decays
// to gamma_max; Negative is the Mean-Teacher-style ramp-up.
enum class ScheduleSign { Positive = 1, Negative = -1 };

// gamma_max * exp(sign * 5 * (1 - t / t_max)^2). t above t_max is clamped
// with a warning; t < 0 or t_max <= 0 throws ValidationError.
double gamma_schedule(double step, double total_steps, double gamma_max,
                      ScheduleSign sign = ScheduleSign::Positive);

}  // namespace dmt
