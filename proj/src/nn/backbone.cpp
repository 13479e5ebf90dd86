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

#include "dmt/nn/backbone.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <iterator>

#include "dmt/core/error.hpp"

namespace dmt::nn {

namespace {

std::size_t parse_count(const std::string& text, const std::string& context) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || v == 0) {
    throw ConfigError(fmt::format("bad number '{}' in architecture '{}'", text, context));
  }
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

ArchSpec ArchSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (text.rfind("in=", 0) != 0 || colon == std::string::npos) {
    throw ConfigError(fmt::format("architecture '{}' must look like in=<shape>:<layers>", text));
  }
  ArchSpec spec;
  for (const auto& d : split(text.substr(3, colon - 3), 'x')) spec.input.push_back(parse_count(d, text));
  spec.tokens = split(text.substr(colon + 1), '-');
  for (const auto& t : spec.tokens) {
    if (t.empty()) throw ConfigError(fmt::format("empty layer token in '{}'", text));
    const char kind = t[0];
    const bool sized = kind == 'd' || kind == 'c' || kind == 'o' || kind == 'k';
    const bool bare = kind == 'p' || kind == 'u' || kind == 'g';
    if (sized) {
      parse_count(t.substr(1), text);
    } else if (!bare || t.size() != 1) {
      throw ConfigError(fmt::format("unknown layer token '{}' in '{}'", t, text));
    }
  }
  const char last = spec.tokens.back()[0];
  if (last != 'o' && last != 'k') {
    throw ConfigError(fmt::format("architecture '{}' must end in an o<N> or k<N> head", text));
  }
  return spec;
}

std::string ArchSpec::to_string() const {
  std::string s = "in=";
  for (std::size_t i = 0; i < input.size(); ++i) s += (i ? "x" : "") + std::to_string(input[i]);
  s += ':';
  for (std::size_t i = 0; i < tokens.size(); ++i) s += (i ? "-" : "") + tokens[i];
  return s;
}

SequentialBackbone::SequentialBackbone(ArchSpec arch, std::uint64_t seed) : arch_(std::move(arch)) {
  for (const auto& t : arch_.tokens) {
    const std::size_t n = t.size() > 1 ? std::stoul(t.substr(1)) : 0;
    switch (t[0]) {
      case 'd': layers_.push_back(make_dense(n, false)); layers_.push_back(make_relu()); break;
      case 'c': layers_.push_back(make_conv(n, 3, false)); layers_.push_back(make_relu()); break;
      case 'o': layers_.push_back(make_dense(n, true)); break;
      case 'k': layers_.push_back(make_conv(n, 1, true)); break;
      case 'p': layers_.push_back(make_max_pool2()); break;
      case 'u': layers_.push_back(make_upsample2()); break;
      case 'g': layers_.push_back(make_global_avg_pool()); break;
      default: throw ConfigError(fmt::format("unknown layer token '{}'", t));
    }
  }
  Shape shape = arch_.input;
  std::size_t total = 0;
  for (const auto& layer : layers_) {
    input_shapes_.push_back(shape);
    offsets_.push_back(total);
    counts_.push_back(layer->parameter_count(shape));
    total += counts_.back();
    shape = layer->output_shape(shape);
  }
  num_classes_ = shape[0];
  params_.assign(total, 0.0f);
  grads_.assign(total, 0.0f);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->initialize(input_shapes_[i], std::span(params_).subspan(offsets_[i], counts_[i]), rng);
  }
}

void SequentialBackbone::check_input(const Tensor& inputs) const {
  const Shape sample(inputs.shape().begin() + (inputs.rank() ? 1 : 0), inputs.shape().end());
  if (sample != arch_.input) {
    throw ValidationError(fmt::format("input sample shape does not match architecture '{}'",
                                      arch_.to_string()));
  }
}

Tensor SequentialBackbone::logits(const Tensor& inputs) const {
  check_input(inputs);
  Tensor x = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i]->forward(x, std::span<const float>(params_).subspan(offsets_[i], counts_[i]));
  }
  return x;
}

ForwardPass SequentialBackbone::forward(const Tensor& inputs) const {
  check_input(inputs);
  ForwardPass pass;
  pass.activations.reserve(layers_.size() + 1);
  pass.activations.push_back(inputs);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    pass.activations.push_back(layers_[i]->forward(
        pass.activations.back(), std::span<const float>(params_).subspan(offsets_[i], counts_[i])));
  }
  return pass;
}

void SequentialBackbone::backward(const ForwardPass& pass, const Tensor& grad_logits) {
  if (grad_logits.shape() != pass.logits().shape()) {
    throw ValidationError("logit gradient shape does not match the forward pass");
  }
  Tensor grad = grad_logits;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    grad = layers_[i]->backward(pass.activations[i], pass.activations[i + 1], grad,
                                std::span<const float>(params_).subspan(offsets_[i], counts_[i]),
                                std::span(grads_).subspan(offsets_[i], counts_[i]));
  }
}

void SequentialBackbone::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0f); }

std::unique_ptr<Backbone> SequentialBackbone::clone() const {
  return std::make_unique<SequentialBackbone>(*this);
}

std::unique_ptr<Backbone> make_backbone(const std::string& arch, std::uint64_t seed) {
  return std::make_unique<SequentialBackbone>(ArchSpec::parse(arch), seed);
}

namespace {

constexpr std::array<char, 4> kCheckpointMagic = {'D', 'M', 'T', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_floats(std::string& out, const std::vector<float>& v) {
  put_u64(out, v.size());
  for (float f : v) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}
  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string text(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<float> floats() {
    const std::uint64_t n = uint(8);
    need(n * 4);
    std::vector<float> v(n);
    for (auto& f : v) f = std::bit_cast<float>(static_cast<std::uint32_t>(uint(4)));
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(fmt::format("'{}': truncated checkpoint", origin_));
  }
  const std::string& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

const std::vector<float>* Checkpoint::extra(const std::string& name) const {
  for (const auto& [key, values] : extras) {
    if (key == name) return &values;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.arch.size()));
  out += ckpt.arch;
  put_floats(out, ckpt.parameters);
  put_u32(out, static_cast<std::uint32_t>(ckpt.extras.size()));
  for (const auto& [name, values] : ckpt.extras) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_floats(out, values);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError(fmt::format("failed to write checkpoint '{}'", path.string()));
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(fmt::format("cannot open checkpoint '{}'", path.string()));
  const std::string bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  Reader r(bytes, path.string());
  if (r.text(4) != std::string(kCheckpointMagic.begin(), kCheckpointMagic.end())) {
    throw FormatError(fmt::format("'{}': not a checkpoint", path.string()));
  }
  if (const auto v = r.uint(4); v != kCheckpointVersion) {
    throw FormatError(fmt::format("'{}': unsupported checkpoint version {}", path.string(), v));
  }
  Checkpoint ckpt;
  ckpt.arch = r.text(r.uint(4));
  ckpt.parameters = r.floats();
  const auto extras = r.uint(4);
  for (std::uint64_t i = 0; i < extras; ++i) {
    auto name = r.text(r.uint(4));
    ckpt.extras.emplace_back(std::move(name), r.floats());
  }
  if (!r.done()) throw FormatError(fmt::format("'{}': trailing bytes", path.string()));
  return ckpt;
}

Checkpoint to_checkpoint(const Backbone& model) {
  const auto p = model.parameters();
  return {model.arch().to_string(), std::vector<float>(p.begin(), p.end()), {}};
}

std::unique_ptr<Backbone> from_checkpoint(const Checkpoint& ckpt) {
  auto model = make_backbone(ckpt.arch, 0);
  if (model->parameters().size() != ckpt.parameters.size()) {
    throw FormatError(fmt::format("checkpoint has {} parameters, architecture '{}' needs {}",
                                  ckpt.parameters.size(), ckpt.arch, model->parameters().size()));
  }
  std::copy(ckpt.parameters.begin(), ckpt.parameters.end(), model->parameters().begin());
  return model;
}

}  // namespace dmt::nn
