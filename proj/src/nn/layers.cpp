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

#include "dmt/nn/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <fmt/format.h>

#include "dmt/core/error.hpp"

namespace dmt::nn {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXf>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXf>;

Shape batched(std::size_t n, const Shape& sample) {
  Shape s{n};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

void require_rank(const Shape& input, std::size_t rank, const char* layer) {
  if (input.size() != rank) {
    throw ValidationError(fmt::format("{} expects rank-{} samples, got rank {}", layer, rank,
                                      input.size()));
  }
}

void fill_normal(std::span<float> values, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (float& v : values) v = static_cast<float>(dist(rng));
}

class Dense final : public Layer {
 public:
  Dense(std::size_t outputs, bool output_layer) : outputs_(outputs), output_layer_(output_layer) {}

  std::string token() const override {
    return fmt::format("{}{}", output_layer_ ? 'o' : 'd', outputs_);
  }
  Shape output_shape(const Shape&) const override { return {outputs_}; }
  std::size_t parameter_count(const Shape& input) const override {
    return outputs_ * shape_size(input) + outputs_;
  }
  void initialize(const Shape& input, std::span<float> params, std::mt19937_64& rng) const override {
    const std::size_t fan_in = shape_size(input);
    fill_normal(params.first(outputs_ * fan_in),
                std::sqrt((output_layer_ ? 1.0 : 2.0) / static_cast<double>(fan_in)), rng);
  }

  Tensor forward(const Tensor& input, std::span<const float> params) const override {
    const std::size_t n = input.batch();
    const std::size_t d = input.sample_size();
    ConstMatrixMap x(input.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    ConstMatrixMap w(params.data(), static_cast<Eigen::Index>(outputs_), static_cast<Eigen::Index>(d));
    ConstVectorMap b(params.data() + outputs_ * d, static_cast<Eigen::Index>(outputs_));
    Tensor out({n, outputs_});
    MatrixMap y(out.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(outputs_));
    y.noalias() = x * w.transpose();
    y.rowwise() += b.transpose();
    return out;
  }

  Tensor backward(const Tensor& input, const Tensor&, const Tensor& grad_output,
                  std::span<const float> params, std::span<float> grads) const override {
    const std::size_t n = input.batch();
    const std::size_t d = input.sample_size();
    const auto ni = static_cast<Eigen::Index>(n);
    const auto di = static_cast<Eigen::Index>(d);
    const auto oi = static_cast<Eigen::Index>(outputs_);
    ConstMatrixMap x(input.data(), ni, di);
    ConstMatrixMap dy(grad_output.data(), ni, oi);
    ConstMatrixMap w(params.data(), oi, di);
    MatrixMap dw(grads.data(), oi, di);
    VectorMap db(grads.data() + outputs_ * d, oi);
    dw.noalias() += dy.transpose() * x;
    db += dy.colwise().sum().transpose();
    Tensor dx(input.shape());
    MatrixMap dxm(dx.data(), ni, di);
    dxm.noalias() = dy * w;
    return dx;
  }

 private:
  std::size_t outputs_;
  bool output_layer_;
};

class Conv final : public Layer {
 public:
  Conv(std::size_t channels, std::size_t kernel, bool output_layer)
      : channels_(channels), kernel_(kernel), output_layer_(output_layer) {
    if (kernel != 1 && kernel != 3) throw ValidationError("convolution kernel must be 1 or 3");
  }

  std::string token() const override {
    return fmt::format("{}{}", output_layer_ ? 'k' : 'c', channels_);
  }
  Shape output_shape(const Shape& input) const override {
    require_rank(input, 3, "convolution");
    return {channels_, input[1], input[2]};
  }
  std::size_t parameter_count(const Shape& input) const override {
    require_rank(input, 3, "convolution");
    return channels_ * patch(input) + channels_;
  }
  void initialize(const Shape& input, std::span<float> params, std::mt19937_64& rng) const override {
    const std::size_t fan_in = patch(input);
    fill_normal(params.first(channels_ * fan_in),
                std::sqrt((output_layer_ ? 1.0 : 2.0) / static_cast<double>(fan_in)), rng);
  }

  Tensor forward(const Tensor& input, std::span<const float> params) const override {
    const Shape in{input.dim(1), input.dim(2), input.dim(3)};
    const std::size_t k = patch(in);
    const std::size_t hw = in[1] * in[2];
    ConstMatrixMap w(params.data(), static_cast<Eigen::Index>(channels_), static_cast<Eigen::Index>(k));
    ConstVectorMap b(params.data() + channels_ * k, static_cast<Eigen::Index>(channels_));
    Tensor out(batched(input.batch(), output_shape(in)));
    RowMatrix cols;
    for (std::size_t i = 0; i < input.batch(); ++i) {
      MatrixMap y(out.data() + i * channels_ * hw, static_cast<Eigen::Index>(channels_),
                  static_cast<Eigen::Index>(hw));
      const float* x = input.data() + i * in[0] * hw;
      if (kernel_ == 1) {
        y.noalias() = w * ConstMatrixMap(x, static_cast<Eigen::Index>(in[0]), static_cast<Eigen::Index>(hw));
      } else {
        im2col(x, in, cols);
        y.noalias() = w * cols;
      }
      y.colwise() += b;
    }
    return out;
  }

  Tensor backward(const Tensor& input, const Tensor&, const Tensor& grad_output,
                  std::span<const float> params, std::span<float> grads) const override {
    const Shape in{input.dim(1), input.dim(2), input.dim(3)};
    const std::size_t k = patch(in);
    const std::size_t hw = in[1] * in[2];
    const auto ci = static_cast<Eigen::Index>(channels_);
    const auto ki = static_cast<Eigen::Index>(k);
    const auto hwi = static_cast<Eigen::Index>(hw);
    ConstMatrixMap w(params.data(), ci, ki);
    MatrixMap dw(grads.data(), ci, ki);
    VectorMap db(grads.data() + channels_ * k, ci);
    Tensor dx(input.shape());
    RowMatrix cols;
    RowMatrix dcols;
    for (std::size_t i = 0; i < input.batch(); ++i) {
      ConstMatrixMap dy(grad_output.data() + i * channels_ * hw, ci, hwi);
      const float* x = input.data() + i * in[0] * hw;
      db += dy.rowwise().sum();
      if (kernel_ == 1) {
        ConstMatrixMap xm(x, static_cast<Eigen::Index>(in[0]), hwi);
        dw.noalias() += dy * xm.transpose();
        MatrixMap dxm(dx.data() + i * in[0] * hw, static_cast<Eigen::Index>(in[0]), hwi);
        dxm.noalias() = w.transpose() * dy;
      } else {
        im2col(x, in, cols);
        dw.noalias() += dy * cols.transpose();
        dcols.noalias() = w.transpose() * dy;
        col2im(dcols, in, dx.data() + i * in[0] * hw);
      }
    }
    return dx;
  }

 private:
  std::size_t patch(const Shape& in) const { return in[0] * kernel_ * kernel_; }

  // 3x3 same-padding patches: row (c*3+ky)*3+kx, column y*W+x.
  static void im2col(const float* x, const Shape& in, RowMatrix& cols) {
    const std::size_t c = in[0], h = in[1], wd = in[2];
    cols.setZero(static_cast<Eigen::Index>(c * 9), static_cast<Eigen::Index>(h * wd));
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          float* row = cols.data() + ((ch * 3 + ky) * 3 + kx) * h * wd;
          for (std::size_t y = 0; y < h; ++y) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
            const float* src = x + (ch * h + static_cast<std::size_t>(sy)) * wd;
            for (std::size_t xx = 0; xx < wd; ++xx) {
              const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - 1;
              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
              row[y * wd + xx] = src[sx];
            }
          }
        }
      }
    }
  }

  static void col2im(const RowMatrix& cols, const Shape& in, float* dx) {
    const std::size_t c = in[0], h = in[1], wd = in[2];
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const float* row = cols.data() + ((ch * 3 + ky) * 3 + kx) * h * wd;
          for (std::size_t y = 0; y < h; ++y) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
            float* dst = dx + (ch * h + static_cast<std::size_t>(sy)) * wd;
            for (std::size_t xx = 0; xx < wd; ++xx) {
              const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - 1;
              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
              dst[sx] += row[y * wd + xx];
            }
          }
        }
      }
    }
  }

  std::size_t channels_;
  std::size_t kernel_;
  bool output_layer_;
};

class Relu final : public Layer {
 public:
  std::string token() const override { return "relu"; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& input, std::span<const float>) const override {
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0f ? input[i] : 0.0f;
    return out;
  }
  Tensor backward(const Tensor&, const Tensor& output, const Tensor& grad_output,
                  std::span<const float>, std::span<float>) const override {
    Tensor dx(output.shape());
    for (std::size_t i = 0; i < output.size(); ++i) dx[i] = output[i] > 0.0f ? grad_output[i] : 0.0f;
    return dx;
  }
};

class MaxPool2 final : public Layer {
 public:
  std::string token() const override { return "p"; }
  Shape output_shape(const Shape& input) const override {
    require_rank(input, 3, "max pool");
    if (input[1] % 2 != 0 || input[2] % 2 != 0) {
      throw ValidationError(fmt::format("max pool needs even spatial size, got {}x{}", input[1], input[2]));
    }
    return {input[0], input[1] / 2, input[2] / 2};
  }
  Tensor forward(const Tensor& input, std::span<const float>) const override {
    const std::size_t planes = input.batch() * input.dim(1);
    const std::size_t h = input.dim(2), w = input.dim(3);
    Tensor out({input.batch(), input.dim(1), h / 2, w / 2});
    for (std::size_t p = 0; p < planes; ++p) {
      const float* src = input.data() + p * h * w;
      float* dst = out.data() + p * (h / 2) * (w / 2);
      for (std::size_t y = 0; y < h / 2; ++y) {
        for (std::size_t x = 0; x < w / 2; ++x) {
          dst[y * (w / 2) + x] = src[argmax_window(src, w, y, x)];
        }
      }
    }
    return out;
  }
  Tensor backward(const Tensor& input, const Tensor&, const Tensor& grad_output,
                  std::span<const float>, std::span<float>) const override {
    const std::size_t planes = input.batch() * input.dim(1);
    const std::size_t h = input.dim(2), w = input.dim(3);
    Tensor dx(input.shape());
    for (std::size_t p = 0; p < planes; ++p) {
      const float* src = input.data() + p * h * w;
      const float* dy = grad_output.data() + p * (h / 2) * (w / 2);
      float* dst = dx.data() + p * h * w;
      for (std::size_t y = 0; y < h / 2; ++y) {
        for (std::size_t x = 0; x < w / 2; ++x) {
          dst[argmax_window(src, w, y, x)] += dy[y * (w / 2) + x];
        }
      }
    }
    return dx;
  }

 private:
  static std::size_t argmax_window(const float* src, std::size_t w, std::size_t y, std::size_t x) {
    std::size_t best = (2 * y) * w + 2 * x;
    for (std::size_t dy = 0; dy < 2; ++dy) {
      for (std::size_t dx = 0; dx < 2; ++dx) {
        const std::size_t idx = (2 * y + dy) * w + 2 * x + dx;
        if (src[idx] > src[best]) best = idx;
      }
    }
    return best;
  }
};

class Upsample2 final : public Layer {
 public:
  std::string token() const override { return "u"; }
  Shape output_shape(const Shape& input) const override {
    require_rank(input, 3, "upsample");
    return {input[0], input[1] * 2, input[2] * 2};
  }
  Tensor forward(const Tensor& input, std::span<const float>) const override {
    const std::size_t planes = input.batch() * input.dim(1);
    const std::size_t h = input.dim(2), w = input.dim(3);
    Tensor out({input.batch(), input.dim(1), 2 * h, 2 * w});
    for (std::size_t p = 0; p < planes; ++p) {
      const float* src = input.data() + p * h * w;
      float* dst = out.data() + p * 4 * h * w;
      for (std::size_t y = 0; y < 2 * h; ++y) {
        for (std::size_t x = 0; x < 2 * w; ++x) dst[y * 2 * w + x] = src[(y / 2) * w + x / 2];
      }
    }
    return out;
  }
  Tensor backward(const Tensor& input, const Tensor&, const Tensor& grad_output,
                  std::span<const float>, std::span<float>) const override {
    const std::size_t planes = input.batch() * input.dim(1);
    const std::size_t h = input.dim(2), w = input.dim(3);
    Tensor dx(input.shape());
    for (std::size_t p = 0; p < planes; ++p) {
      const float* dy = grad_output.data() + p * 4 * h * w;
      float* dst = dx.data() + p * h * w;
      for (std::size_t y = 0; y < 2 * h; ++y) {
        for (std::size_t x = 0; x < 2 * w; ++x) dst[(y / 2) * w + x / 2] += dy[y * 2 * w + x];
      }
    }
    return dx;
  }
};

class GlobalAvgPool final : public Layer {
 public:
  std::string token() const override { return "g"; }
  Shape output_shape(const Shape& input) const override {
    require_rank(input, 3, "global average pool");
    return {input[0]};
  }
  Tensor forward(const Tensor& input, std::span<const float>) const override {
    const std::size_t planes = input.batch() * input.dim(1);
    const std::size_t hw = input.dim(2) * input.dim(3);
    Tensor out({input.batch(), input.dim(1)});
    for (std::size_t p = 0; p < planes; ++p) {
      float s = 0.0f;
      for (std::size_t i = 0; i < hw; ++i) s += input[p * hw + i];
      out[p] = s / static_cast<float>(hw);
    }
    return out;
  }
  Tensor backward(const Tensor& input, const Tensor&, const Tensor& grad_output,
                  std::span<const float>, std::span<float>) const override {
    const std::size_t planes = input.batch() * input.dim(1);
    const std::size_t hw = input.dim(2) * input.dim(3);
    Tensor dx(input.shape());
    for (std::size_t p = 0; p < planes; ++p) {
      const float g = grad_output[p] / static_cast<float>(hw);
      for (std::size_t i = 0; i < hw; ++i) dx[p * hw + i] = g;
    }
    return dx;
  }
};

}  // namespace

std::shared_ptr<const Layer> make_dense(std::size_t outputs, bool output_layer) {
  return std::make_shared<Dense>(outputs, output_layer);
}
std::shared_ptr<const Layer> make_conv(std::size_t channels, std::size_t kernel, bool output_layer) {
  return std::make_shared<Conv>(channels, kernel, output_layer);
}
std::shared_ptr<const Layer> make_relu() { return std::make_shared<Relu>(); }
std::shared_ptr<const Layer> make_max_pool2() { return std::make_shared<MaxPool2>(); }
std::shared_ptr<const Layer> make_upsample2() { return std::make_shared<Upsample2>(); }
std::shared_ptr<const Layer> make_global_avg_pool() { return std::make_shared<GlobalAvgPool>(); }

}  // namespace dmt::nn
