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

#include "dmt/harness/presets.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "dmt/core/error.hpp"

namespace dmt::harness {

// Defined in the generated preset table.
const std::map<std::string, std::string>& embedded_presets();

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : embedded_presets()) names.push_back(name);
  return names;
}

const std::string& preset_text(const std::string& name) {
  const auto& table = embedded_presets();
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError(fmt::format("no preset named '{}'", name));
  return it->second;
}

train::ExperimentConfig load_config(const std::string& path_or_preset) {
  std::string text;
  if (std::filesystem::is_regular_file(path_or_preset)) {
    std::ifstream in(path_or_preset);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  } else if (embedded_presets().count(path_or_preset)) {
    text = preset_text(path_or_preset);
  } else {
    throw ConfigError(fmt::format("'{}' is neither a config file nor a preset", path_or_preset));
  }
  auto config = train::parse_config(text);
  config.validate();
  return config;
}

train::ExperimentConfig with_overrides(train::ExperimentConfig config,
                                       const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("override '{}' is not key=value", o));
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    train::apply_setting(config, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  config.validate();
  return config;
}

}  // namespace dmt::harness
