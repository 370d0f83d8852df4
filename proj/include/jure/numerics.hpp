#pragma once

// Dense arrays and the differentiable layers of the repair network. Every
// layer has a forward pass and a hand-derived backward pass; there is no
// autodiff graph.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "jure/error.hpp"

namespace jure {

/// Row-major 2-D array. Biases are stored as 1×n matrices.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  bool same_shape(const Matrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Read-only view of one W×C window (timestep-major).
template <class T>
struct WindowView {
  std::span<const T> data;
  std::size_t steps = 0;
  std::size_t channels = 0;

  const T& operator()(std::size_t t, std::size_t c) const {
    return data[t * channels + c];
  }
};

/// B×W×C array: batch × timesteps × channels, channel index fastest.
template <class T>
class Batch3 {
 public:
  Batch3() = default;
  Batch3(std::size_t batch, std::size_t steps, std::size_t channels,
         T fill = T{0})
      : batch_(batch),
        steps_(steps),
        channels_(channels),
        data_(batch * steps * channels, fill) {}

  std::size_t batch() const noexcept { return batch_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t b, std::size_t t, std::size_t c) {
    return data_[(b * steps_ + t) * channels_ + c];
  }
  const T& operator()(std::size_t b, std::size_t t, std::size_t c) const {
    return data_[(b * steps_ + t) * channels_ + c];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  /// Channel vector at (b, t).
  std::span<T> at(std::size_t b, std::size_t t) {
    return {data_.data() + (b * steps_ + t) * channels_, channels_};
  }
  std::span<const T> at(std::size_t b, std::size_t t) const {
    return {data_.data() + (b * steps_ + t) * channels_, channels_};
  }

  WindowView<T> window(std::size_t b) const {
    return {{data_.data() + b * steps_ * channels_, steps_ * channels_},
            steps_,
            channels_};
  }

  bool same_shape(const Batch3& o) const noexcept {
    return batch_ == o.batch_ && steps_ == o.steps_ && channels_ == o.channels_;
  }

  std::string shape_string() const {
    std::ostringstream os;
    os << batch_ << "x" << steps_ << "x" << channels_;
    return os.str();
  }

  friend bool operator==(const Batch3&, const Batch3&) = default;

 private:
  std::size_t batch_ = 0;
  std::size_t steps_ = 0;
  std::size_t channels_ = 0;
  std::vector<T> data_;
};

/// A learnable array with its gradient and AdamW moment buffers.
template <class T>
struct ParamTensor {
  Matrix<T> value;
  Matrix<T> grad;
  Matrix<T> m;
  Matrix<T> v;
  std::uint64_t step_count = 0;

  ParamTensor() = default;
  ParamTensor(std::size_t rows, std::size_t cols)
      : value(rows, cols), grad(rows, cols), m(rows, cols), v(rows, cols) {}

  std::size_t size() const noexcept { return value.size(); }
};

// ---------------------------------------------------------------------------
// Matrix kernels. A B×W×C batch is a contiguous (B·W)×C row-major matrix, so
// 1×1 convolutions reduce to two products, delegated to Eigen.

namespace kernels {

template <class T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Map = Eigen::Map<RowMajor<T>>;
template <class T>
using ConstMap = Eigen::Map<const RowMajor<T>>;

/// Y (n×m) = X (n×k) · A (k×m), plus `bias` on every row when non-null.
template <class T>
void matmul_bias(const T* x, std::size_t n, std::size_t k, const T* a, std::size_t m,
                 const T* bias, T* y) {
  const auto rn = static_cast<Eigen::Index>(n);
  const auto rk = static_cast<Eigen::Index>(k);
  const auto rm = static_cast<Eigen::Index>(m);
  Map<T> out(y, rn, rm);
  out.noalias() = ConstMap<T>(x, rn, rk) * ConstMap<T>(a, rk, rm);
  if (bias) {
    out.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias, rm);
  }
}

/// G (k×m) += Xᵀ (k×n) · D (n×m).
template <class T>
void accumulate_outer(const T* x, std::size_t n, std::size_t k, const T* d, std::size_t m, T* g) {
  const auto rn = static_cast<Eigen::Index>(n);
  const auto rk = static_cast<Eigen::Index>(k);
  const auto rm = static_cast<Eigen::Index>(m);
  Map<T>(g, rk, rm).noalias() += ConstMap<T>(x, rn, rk).transpose() * ConstMap<T>(d, rn, rm);
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// 1×1 convolution: per-timestep channel mixing.

template <class T>
Batch3<T> conv1x1_forward(const Batch3<T>& input, const Matrix<T>& weight,
                          const Matrix<T>& bias) {
  const std::size_t cin = input.channels();
  const std::size_t cout = weight.cols();
  require_dims(weight.rows() == cin,
               "conv1x1: weight has " + std::to_string(weight.rows()) +
                   " rows but input has " + std::to_string(cin) + " channels");
  require_dims(bias.size() == cout, "conv1x1: bias length != output channels");

  Batch3<T> out(input.batch(), input.steps(), cout);
  kernels::matmul_bias(input.values().data(), input.batch() * input.steps(), cin,
                       weight.values().data(), cout, bias.values().data(),
                       out.values().data());
  return out;
}

template <class T>
struct Conv1x1Grads {
  Batch3<T> input;
  Matrix<T> weight;
  Matrix<T> bias;
};

template <class T>
Conv1x1Grads<T> conv1x1_backward(const Batch3<T>& input,
                                 const Matrix<T>& weight,
                                 const Batch3<T>& grad_out) {
  const std::size_t cin = input.channels();
  const std::size_t cout = weight.cols();
  require_dims(weight.rows() == cin, "conv1x1_backward: weight/input mismatch");
  require_dims(grad_out.batch() == input.batch() &&
                   grad_out.steps() == input.steps() &&
                   grad_out.channels() == cout,
               "conv1x1_backward: grad_out has shape " +
                   grad_out.shape_string() + ", expected " +
                   std::to_string(input.batch()) + "x" +
                   std::to_string(input.steps()) + "x" + std::to_string(cout));

  Conv1x1Grads<T> g{Batch3<T>(input.batch(), input.steps(), cin),
                    Matrix<T>(cin, cout), Matrix<T>(1, cout)};
  const std::size_t rows = input.batch() * input.steps();
  // grad_input = grad_out · weightᵀ
  const auto rr = static_cast<Eigen::Index>(rows);
  const auto ri = static_cast<Eigen::Index>(cin);
  const auto ro = static_cast<Eigen::Index>(cout);
  kernels::Map<T>(g.input.values().data(), rr, ri).noalias() =
      kernels::ConstMap<T>(grad_out.values().data(), rr, ro) *
      kernels::ConstMap<T>(weight.values().data(), ri, ro).transpose();
  // grad_weight = inputᵀ · grad_out
  kernels::accumulate_outer(input.values().data(), rows, cin, grad_out.values().data(), cout,
                            g.weight.values().data());
  T* gb = g.bias.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* go = grad_out.values().data() + r * cout;
    for (std::size_t j = 0; j < cout; ++j) gb[j] += go[j];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Depthwise temporal convolution with symmetric zero padding. Kernel is K×H:
// column c holds the taps of channel c, row k multiplies input[t + k - pad].

template <class T>
Batch3<T> depthwise_conv_forward(const Batch3<T>& input,
                                 const Matrix<T>& kernel,
                                 const Matrix<T>& bias) {
  const std::size_t k_size = kernel.rows();
  const std::size_t ch = input.channels();
  require_config(k_size % 2 == 1, "depthwise_conv: kernel size must be odd, got " +
                                      std::to_string(k_size));
  require_dims(kernel.cols() == ch, "depthwise_conv: kernel has " +
                                        std::to_string(kernel.cols()) +
                                        " columns but input has " +
                                        std::to_string(ch) + " channels");
  require_dims(bias.size() == ch, "depthwise_conv: bias length != channels");

  const auto pad = static_cast<std::ptrdiff_t>(k_size / 2);
  const auto steps = static_cast<std::ptrdiff_t>(input.steps());
  Batch3<T> out(input.batch(), input.steps(), ch);
  const T* kv = kernel.values().data();
  const T* bv = bias.values().data();
  for (std::size_t b = 0; b < input.batch(); ++b) {
    for (std::ptrdiff_t t = 0; t < steps; ++t) {
      T* y = out.at(b, static_cast<std::size_t>(t)).data();
      for (std::size_t c = 0; c < ch; ++c) y[c] = bv[c];
      for (std::size_t k = 0; k < k_size; ++k) {
        const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(k) - pad;
        if (src < 0 || src >= steps) continue;
        const T* x = input.at(b, static_cast<std::size_t>(src)).data();
        const T* kr = kv + k * ch;
        for (std::size_t c = 0; c < ch; ++c) y[c] += x[c] * kr[c];
      }
    }
  }
  return out;
}

template <class T>
struct DepthwiseGrads {
  Batch3<T> input;
  Matrix<T> kernel;
  Matrix<T> bias;
};

template <class T>
DepthwiseGrads<T> depthwise_conv_backward(const Batch3<T>& input,
                                          const Matrix<T>& kernel,
                                          const Batch3<T>& grad_out) {
  const std::size_t k_size = kernel.rows();
  const std::size_t ch = input.channels();
  require_config(k_size % 2 == 1, "depthwise_conv_backward: kernel size must be odd");
  require_dims(kernel.cols() == ch, "depthwise_conv_backward: kernel/input mismatch");
  require_dims(grad_out.same_shape(input),
               "depthwise_conv_backward: grad_out has shape " +
                   grad_out.shape_string() + ", expected " +
                   input.shape_string());

  DepthwiseGrads<T> g{Batch3<T>(input.batch(), input.steps(), ch),
                      Matrix<T>(k_size, ch), Matrix<T>(1, ch)};
  const auto pad = static_cast<std::ptrdiff_t>(k_size / 2);
  const auto steps = static_cast<std::ptrdiff_t>(input.steps());
  const T* kv = kernel.values().data();
  T* gk = g.kernel.values().data();
  T* gb = g.bias.values().data();
  for (std::size_t b = 0; b < input.batch(); ++b) {
    for (std::ptrdiff_t t = 0; t < steps; ++t) {
      const T* go = grad_out.at(b, static_cast<std::size_t>(t)).data();
      for (std::size_t c = 0; c < ch; ++c) gb[c] += go[c];
      for (std::size_t k = 0; k < k_size; ++k) {
        const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(k) - pad;
        if (src < 0 || src >= steps) continue;
        const T* x = input.at(b, static_cast<std::size_t>(src)).data();
        T* gx = g.input.at(b, static_cast<std::size_t>(src)).data();
        const T* kr = kv + k * ch;
        T* gkr = gk + k * ch;
        for (std::size_t c = 0; c < ch; ++c) {
          gx[c] += go[c] * kr[c];
          gkr[c] += x[c] * go[c];
        }
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// GELU, exact form x·Φ(x).

template <class T>
T gaussian_cdf(T x) {
  return T(0.5) * std::erfc(-x / std::numbers::sqrt2_v<T>);
}

template <class T>
T gaussian_pdf(T x) {
  return std::exp(T(-0.5) * x * x) * (std::numbers::inv_sqrtpi_v<T> /
                                       std::numbers::sqrt2_v<T>);
}

template <class T>
T gelu(T x) {
  return x * gaussian_cdf(x);
}

template <class T>
T gelu_derivative(T x) {
  return gaussian_cdf(x) + x * gaussian_pdf(x);
}

template <class T>
Batch3<T> gelu_forward(const Batch3<T>& input) {
  Batch3<T> out = input;
  for (auto& v : out.values()) v = gelu(v);
  return out;
}

template <class T>
Batch3<T> gelu_backward(const Batch3<T>& input, const Batch3<T>& grad_out) {
  require_dims(input.same_shape(grad_out), "gelu_backward: shape mismatch");
  Batch3<T> g(input.batch(), input.steps(), input.channels());
  for (std::size_t i = 0; i < input.size(); ++i) {
    g[i] = grad_out[i] * gelu_derivative(input[i]);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Huber (smooth L1), averaged over all entries.

inline constexpr double kHuberDelta = 1.0;

template <class T>
T huber_elem(T e, T delta) {
  const T a = std::abs(e);
  return a <= delta ? T(0.5) * e * e / delta : a - T(0.5) * delta;
}

template <class T>
T huber_elem_derivative(T e, T delta) {
  if (e > delta) return T(1);
  if (e < -delta) return T(-1);
  return e / delta;
}

template <class T>
T huber(const Batch3<T>& pred, const Batch3<T>& target, T delta = T(kHuberDelta)) {
  require_dims(pred.same_shape(target), "huber: pred " + pred.shape_string() +
                                            " vs target " + target.shape_string());
  require_config(delta > T(0), "huber: delta must be positive");
  require_dims(pred.size() > 0, "huber: empty input");
  T sum{0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum += huber_elem(pred[i] - target[i], delta);
  }
  return sum / static_cast<T>(pred.size());
}

/// d(huber)/d(pred).
template <class T>
Batch3<T> huber_backward(const Batch3<T>& pred, const Batch3<T>& target,
                         T delta = T(kHuberDelta)) {
  require_dims(pred.same_shape(target), "huber_backward: shape mismatch");
  require_dims(pred.size() > 0, "huber_backward: empty input");
  Batch3<T> g(pred.batch(), pred.steps(), pred.channels());
  const T inv_n = T(1) / static_cast<T>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    g[i] = huber_elem_derivative(pred[i] - target[i], delta) * inv_n;
  }
  return g;
}

// ---------------------------------------------------------------------------
// First difference along time and its adjoint.

template <class T>
Batch3<T> first_diff(const Batch3<T>& input) {
  require_dims(input.steps() >= 2, "first_diff: need at least 2 timesteps, got " +
                                       std::to_string(input.steps()));
  const std::size_t steps = input.steps() - 1;
  Batch3<T> out(input.batch(), steps, input.channels());
  for (std::size_t b = 0; b < input.batch(); ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      const auto next = input.at(b, t + 1);
      const auto cur = input.at(b, t);
      auto y = out.at(b, t);
      for (std::size_t c = 0; c < input.channels(); ++c) y[c] = next[c] - cur[c];
    }
  }
  return out;
}

/// Transpose of first_diff: maps a B×(W−1)×C gradient to B×W×C.
template <class T>
Batch3<T> first_diff_adjoint(const Batch3<T>& grad_out) {
  const std::size_t steps = grad_out.steps() + 1;
  Batch3<T> g(grad_out.batch(), steps, grad_out.channels());
  for (std::size_t b = 0; b < grad_out.batch(); ++b) {
    for (std::size_t t = 0; t < grad_out.steps(); ++t) {
      const auto go = grad_out.at(b, t);
      auto lo = g.at(b, t);
      auto hi = g.at(b, t + 1);
      for (std::size_t c = 0; c < grad_out.channels(); ++c) {
        lo[c] -= go[c];
        hi[c] += go[c];
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// AdamW with decoupled weight decay.

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

inline void validate(const AdamWConfig& cfg) {
  require_config(cfg.lr > 0, "adamw: lr must be positive");
  require_config(cfg.beta1 > 0 && cfg.beta1 < 1, "adamw: beta1 must lie in (0,1)");
  require_config(cfg.beta2 > 0 && cfg.beta2 < 1, "adamw: beta2 must lie in (0,1)");
  require_config(cfg.eps >= 0, "adamw: eps must be non-negative");
  require_config(cfg.weight_decay >= 0, "adamw: weight_decay must be non-negative");
}

/// One AdamW update of `param` from its current `grad`. Throws a numeric
/// error (leaving the tensor untouched) if any gradient entry is non-finite.
template <class T>
void adamw_step(ParamTensor<T>& param, const AdamWConfig& cfg) {
  for (const T g : param.grad.values()) {
    if (!std::isfinite(g)) fail(ErrorKind::numeric, "adamw: non-finite gradient");
  }
  param.step_count += 1;
  const auto step = static_cast<T>(param.step_count);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T lr = static_cast<T>(cfg.lr);
  const T eps = static_cast<T>(cfg.eps);
  const T wd = static_cast<T>(cfg.weight_decay);
  const T bc1 = T(1) - std::pow(b1, step);
  const T bc2 = T(1) - std::pow(b2, step);

  auto value = param.value.values();
  const auto grad = param.grad.values();
  auto m = param.m.values();
  auto v = param.v.values();
  for (std::size_t i = 0; i < value.size(); ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * grad[i];
    v[i] = b2 * v[i] + (T(1) - b2) * grad[i] * grad[i];
    const T m_hat = m[i] / bc1;
    const T v_hat = v[i] / bc2;
    value[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps) + wd * value[i]);
  }
}

template <class T>
bool all_finite(std::span<const T> values) {
  return std::all_of(values.begin(), values.end(),
                     [](T v) { return std::isfinite(v); });
}

/// Element-wise a + b for equal shapes.
template <class T>
Batch3<T> add(const Batch3<T>& a, const Batch3<T>& b) {
  require_dims(a.same_shape(b), "add: shape mismatch " + a.shape_string() +
                                    " vs " + b.shape_string());
  Batch3<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

}  // namespace jure
