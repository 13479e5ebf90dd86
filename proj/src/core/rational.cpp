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

#include "dmt/core/rational.hpp"

#include <charconv>
#include <fmt/format.h>

#include "dmt/core/error.hpp"

namespace dmt {

namespace {

std::int64_t parse_int(std::string_view s, const std::string& whole) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(fmt::format("'{}' is not a ratio like 1/8", whole));
  }
  return v;
}

}  // namespace

Rational Rational::parse(const std::string& text) {
  const auto slash = text.find('/');
  Rational r;
  if (slash == std::string::npos) {
    r.num = parse_int(text, text);
  } else {
    r.num = parse_int(std::string_view(text).substr(0, slash), text);
    r.den = parse_int(std::string_view(text).substr(slash + 1), text);
  }
  if (r.den <= 0 || r.num < 0) throw ValidationError(fmt::format("invalid ratio '{}'", text));
  return r;
}

std::string Rational::to_string() const {
  return den == 1 ? std::to_string(num) : fmt::format("{}/{}", num, den);
}

}  // namespace dmt
