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

#include "dmt/pseudo/serialization.hpp"

#include <bit>
#include <fmt/format.h>
#include <fstream>
#include <iterator>
#include "json.hpp"
#include <openssl/evp.h>
#include <sstream>

#include "dmt/core/error.hpp"

namespace dmt::pseudo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kHeaderBytes = 12;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> read_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open pseudo-label file '{}'", file.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& file, std::span<const std::uint8_t> bytes) {
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("failed to write '{}'", file.string()));
  }
  std::error_code ec;
  fs::rename(tmp, file, ec);
  if (ec) throw IoError(fmt::format("failed to write '{}': {}", file.string(), ec.message()));
}

void write_manifest(const fs::path& directory, const Manifest& m) {
  json files = json::array();
  for (const auto& e : m.files) {
    files.push_back({{"file", e.file}, {"sample_id", e.sample_id}, {"sha256", e.sha256}});
  }
  const json j = {{"format", "dmt-pseudo-labels"}, {"version", 1},
                  {"kind", m.kind},                {"iteration", m.iteration},
                  {"alpha", m.alpha},              {"source_model", m.source_model},
                  {"files", files}};
  const std::string text = j.dump(2) + "\n";
  write_bytes(directory / kManifestName,
              std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const fs::path& file) { return sha256_hex(read_bytes(file)); }

std::vector<std::uint8_t> encode_map(const PseudoLabelMap& map) {
  validate_pseudo_map(map);
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + map.pixels() * 5);
  out.insert(out.end(), kMapMagic.begin(), kMapMagic.end());
  put_u32(out, static_cast<std::uint32_t>(map.height));
  put_u32(out, static_cast<std::uint32_t>(map.width));
  out.insert(out.end(), map.labels.begin(), map.labels.end());
  for (float c : map.confidences) put_u32(out, std::bit_cast<std::uint32_t>(c));
  return out;
}

PseudoLabelMap decode_map(std::span<const std::uint8_t> bytes, const std::string& origin) {
  if (bytes.size() < kHeaderBytes) {
    throw FormatError(fmt::format("'{}': truncated header ({} bytes)", origin, bytes.size()));
  }
  if (!std::equal(kMapMagic.begin(), kMapMagic.end(), bytes.begin())) {
    throw FormatError(fmt::format("'{}': bad magic bytes", origin));
  }
  PseudoLabelMap map;
  map.height = get_u32(bytes, 4);
  map.width = get_u32(bytes, 8);
  const std::size_t n = map.pixels();
  const std::size_t expected = kHeaderBytes + n * 5;
  if (bytes.size() != expected) {
    throw FormatError(fmt::format("'{}': expected {} bytes for {}x{}, found {}", origin, expected,
                                  map.height, map.width, bytes.size()));
  }
  map.labels.assign(bytes.begin() + kHeaderBytes, bytes.begin() + kHeaderBytes + n);
  map.confidences.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    map.confidences[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + n + 4 * i));
  }
  return map;
}

Manifest save_pseudo_labels(const std::vector<PseudoLabelRecord>& records,
                            const fs::path& directory, double alpha) {
  fs::create_directories(directory);
  std::string text;
  for (const auto& r : records) {
    const json j = {{"sample_id", r.sample_id},
                    {"label", r.label},
                    {"confidence", r.confidence},
                    {"source_model", r.source_model},
                    {"iteration", r.iteration}};
    text += j.dump();
    text += '\n';
  }
  const std::span bytes(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
  write_bytes(directory / kRecordsName, bytes);
  Manifest m;
  m.kind = "records";
  m.alpha = alpha;
  m.iteration = records.empty() ? 1 : records.front().iteration;
  m.source_model = records.empty() ? "" : records.front().source_model;
  m.files.push_back({kRecordsName, "", sha256_hex(bytes)});
  write_manifest(directory, m);
  return m;
}

Manifest save_pseudo_labels(const std::vector<PseudoLabelMap>& maps, const fs::path& directory,
                            double alpha) {
  fs::create_directories(directory / "maps");
  Manifest m;
  m.kind = "maps";
  m.alpha = alpha;
  m.iteration = maps.empty() ? 1 : maps.front().iteration;
  m.source_model = maps.empty() ? "" : maps.front().source_model;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto bytes = encode_map(maps[i]);
    const std::string name = fmt::format("maps/{:06d}.dmtl", i);
    write_bytes(directory / name, bytes);
    m.files.push_back({name, maps[i].sample_id, sha256_hex(bytes)});
  }
  write_manifest(directory, m);
  return m;
}

Manifest load_manifest(const fs::path& directory) {
  const auto path = directory / kManifestName;
  const auto bytes = read_bytes(path);
  Manifest m;
  try {
    const json j = json::parse(bytes.begin(), bytes.end());
    if (j.at("format") != "dmt-pseudo-labels" || j.at("version") != 1) {
      throw FormatError(fmt::format("'{}': unsupported manifest format", path.string()));
    }
    m.kind = j.at("kind").get<std::string>();
    m.iteration = j.at("iteration").get<int>();
    m.alpha = j.at("alpha").get<double>();
    m.source_model = j.at("source_model").get<std::string>();
    for (const auto& e : j.at("files")) {
      m.files.push_back({e.at("file").get<std::string>(), e.at("sample_id").get<std::string>(),
                         e.at("sha256").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("'{}': {}", path.string(), e.what()));
  }
  if (m.kind != "records" && m.kind != "maps") {
    throw FormatError(fmt::format("'{}': unknown kind '{}'", path.string(), m.kind));
  }
  return m;
}

PseudoLabels load_pseudo_labels(const fs::path& directory) {
  const Manifest m = load_manifest(directory);
  std::vector<std::vector<std::uint8_t>> contents;
  for (const auto& e : m.files) {
    const auto path = directory / e.file;
    auto bytes = read_bytes(path);
    if (sha256_hex(bytes) != e.sha256) {
      throw FormatError(fmt::format("'{}': checksum mismatch", path.string()));
    }
    contents.push_back(std::move(bytes));
  }
  if (m.kind == "records") {
    std::vector<PseudoLabelRecord> records;
    for (std::size_t f = 0; f < contents.size(); ++f) {
      const std::string origin = (directory / m.files[f].file).string();
      std::istringstream lines(std::string(contents[f].begin(), contents[f].end()));
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(lines, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
          const json j = json::parse(line);
          records.push_back({j.at("sample_id").get<std::string>(), j.at("label").get<ClassIndex>(),
                             j.at("confidence").get<double>(),
                             j.at("source_model").get<std::string>(), j.at("iteration").get<int>()});
        } catch (const json::exception& e) {
          throw FormatError(fmt::format("'{}' line {}: {}", origin, line_no, e.what()));
        }
      }
    }
    return records;
  }
  std::vector<PseudoLabelMap> maps;
  for (std::size_t f = 0; f < contents.size(); ++f) {
    const std::string origin = (directory / m.files[f].file).string();
    auto map = decode_map(contents[f], origin);
    map.sample_id = m.files[f].sample_id;
    map.source_model = m.source_model;
    map.iteration = m.iteration;
    try {
      validate_pseudo_map(map);
    } catch (const ValidationError& e) {
      throw FormatError(fmt::format("'{}': {}", origin, e.what()));
    }
    maps.push_back(std::move(map));
  }
  return maps;
}

}  // namespace dmt::pseudo
