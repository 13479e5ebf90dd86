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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dmt/pseudo/types.hpp"

namespace dmt::pseudo {

inline constexpr std::array<char, 4> kMapMagic = {'D', 'M', 'T', 'L'};
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kRecordsName = "records.jsonl";

struct ManifestEntry {
  std::string file;  // relative to the output directory
  std::string sample_id;
  std::string sha256;
};

struct Manifest {
  std::string kind;  // "records" or "maps"
  int iteration = 1;
  double alpha = 1.0;
  std::string source_model;
  std::vector<ManifestEntry> files;
};

using PseudoLabels = std::variant<std::vector<PseudoLabelRecord>, std::vector<PseudoLabelMap>>;

// Binary map encoding: magic, u32 LE height, u32 LE width, H*W label bytes,
// H*W LE float32 confidences.
std::vector<std::uint8_t> encode_map(const PseudoLabelMap& map);
// Throws FormatError naming `origin` on bad magic, truncation or trailing bytes.
PseudoLabelMap decode_map(std::span<const std::uint8_t> bytes, const std::string& origin);

// Writes labels plus manifest.json into directory (created if missing).
Manifest save_pseudo_labels(const std::vector<PseudoLabelRecord>& records,
                            const std::filesystem::path& directory, double alpha);
Manifest save_pseudo_labels(const std::vector<PseudoLabelMap>& maps,
                            const std::filesystem::path& directory, double alpha);

// Verifies every checksum before returning anything.
PseudoLabels load_pseudo_labels(const std::filesystem::path& directory);
Manifest load_manifest(const std::filesystem::path& directory);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& file);

}  // namespace dmt::pseudo
