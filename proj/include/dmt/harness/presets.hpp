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

#include <string>
#include <vector>

#include "dmt/train/config.hpp"

namespace dmt::harness {

// Names of the shipped presets (the configs/*.cfg files, embedded at build time).
std::vector<std::string> preset_names();
// Text of a shipped preset; ConfigError for unknown names.
const std::string& preset_text(const std::string& name);

// Reads a flat key = value file, or a shipped preset when no such file
// exists. The result is validated; unknown keys and bad values raise
// ConfigError.
train::ExperimentConfig load_config(const std::string& path_or_preset);

// Applies "key=value" overrides on top of config and re-validates.
train::ExperimentConfig with_overrides(train::ExperimentConfig config,
                                       const std::vector<std::string>& overrides);

}  // namespace dmt::harness
