#pragma once

// The repair network: 1×1 input projection, n depthwise-separable residual
// blocks, zero-initialized 1×1 output projection, and a global skip.
//
//   h0      = proj_in(x)
//   h_{i+1} = h_i + GELU(PW_i(DW_i(h_i)))
//   f(x)    = x + proj_out(h_n)

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "jure/error.hpp"
#include "jure/numerics.hpp"
#include "jure/random.hpp"

namespace jure {

struct ModelShape {
  std::size_t channels = 1;
  std::size_t hidden = 128;
  std::size_t kernel = 5;
  std::size_t blocks = 1;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

inline void validate(const ModelShape& s) {
  require_config(s.channels >= 1, "model: channel count must be >= 1");
  require_config(s.hidden >= 1, "model: hidden width must be >= 1");
  require_config(s.blocks >= 1, "model: block count must be >= 1");
  require_config(s.kernel >= 1 && s.kernel % 2 == 1,
                 "model: kernel size must be odd, got " + std::to_string(s.kernel));
}

/// 2HC + H² + (K+3)H + C for one block; each further block adds H² + (K+2)H.
constexpr std::size_t parameter_count_formula(const ModelShape& s) {
  const std::size_t h = s.hidden;
  const std::size_t c = s.channels;
  return 2 * h * c + h + c + s.blocks * (h * h + (s.kernel + 2) * h);
}

template <class T>
struct Layer {
  ParamTensor<T> weight;
  ParamTensor<T> bias;
};

template <class T>
struct SeparableBlock {
  Layer<T> dw;  // K×H kernel, H bias
  Layer<T> pw;  // H×H weight, H bias
};

/// Intermediates of one forward pass, consumed by backward.
template <class T>
struct ForwardCache {
  Batch3<T> input;
  std::vector<Batch3<T>> hidden;   // h_0 … h_n
  std::vector<Batch3<T>> dw_out;   // per block
  std::vector<Batch3<T>> pre_act;  // PW output before GELU, per block
  std::vector<Batch3<T>> cdf;      // Φ(pre_act), per block
};

/// Gradients in parameter declaration order, plus the input gradient.
template <class T>
struct Gradients {
  std::vector<Matrix<T>> params;
  Batch3<T> input;
};

template <class T = double>
class JuReNet {
 public:
  JuReNet() = default;

  /// Fan-in uniform init for every layer except the output projection, which
  /// is all-zero unless `zero_init_output` is false.
  static JuReNet init(const ModelShape& shape, std::uint64_t seed,
                      bool zero_init_output = true) {
    validate(shape);
    JuReNet net;
    net.shape_ = shape;
    const std::size_t c = shape.channels;
    const std::size_t h = shape.hidden;
    const std::size_t k = shape.kernel;
    net.proj_in_ = make_layer(c, h);
    net.blocks_.resize(shape.blocks);
    for (auto& b : net.blocks_) {
      b.dw = make_layer(k, h);
      b.pw = make_layer(h, h);
    }
    net.proj_out_ = make_layer(h, c);

    Rng rng(seed);
    fill_uniform(net.proj_in_, c, rng);
    for (auto& b : net.blocks_) {
      fill_uniform(b.dw, k, rng);
      fill_uniform(b.pw, h, rng);
    }
    if (!zero_init_output) fill_uniform(net.proj_out_, h, rng);
    return net;
  }

  const ModelShape& shape() const noexcept { return shape_; }

  /// Pointers to every parameter tensor in declaration order:
  /// proj_in.{w,b}, then per block dw.{w,b}, pw.{w,b}, then proj_out.{w,b}.
  std::vector<ParamTensor<T>*> parameters() {
    std::vector<ParamTensor<T>*> out{&proj_in_.weight, &proj_in_.bias};
    for (auto& b : blocks_) {
      out.insert(out.end(), {&b.dw.weight, &b.dw.bias, &b.pw.weight, &b.pw.bias});
    }
    out.insert(out.end(), {&proj_out_.weight, &proj_out_.bias});
    return out;
  }
  std::vector<const ParamTensor<T>*> parameters() const {
    std::vector<const ParamTensor<T>*> out;
    for (auto* p : const_cast<JuReNet*>(this)->parameters()) out.push_back(p);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += p->size();
    return n;
  }

  const Layer<T>& proj_in() const noexcept { return proj_in_; }
  const Layer<T>& proj_out() const noexcept { return proj_out_; }
  const std::vector<SeparableBlock<T>>& blocks() const noexcept { return blocks_; }
  Layer<T>& proj_in() noexcept { return proj_in_; }
  Layer<T>& proj_out() noexcept { return proj_out_; }
  std::vector<SeparableBlock<T>>& blocks() noexcept { return blocks_; }

  /// Repair of `x`. When `cache` is non-null it receives the intermediates
  /// needed by backward().
  Batch3<T> forward(const Batch3<T>& x, ForwardCache<T>* cache = nullptr) const {
    require_dims(x.channels() == shape_.channels,
                 "forward: input has " + std::to_string(x.channels()) +
                     " channels, network expects " +
                     std::to_string(shape_.channels));
    Batch3<T> h = conv1x1_forward(x, proj_in_.weight.value, proj_in_.bias.value);
    if (cache) {
      cache->input = x;
      cache->hidden.clear();
      cache->dw_out.clear();
      cache->pre_act.clear();
      cache->cdf.clear();
    }
    for (const auto& block : blocks_) {
      Batch3<T> d = depthwise_conv_forward(h, block.dw.weight.value, block.dw.bias.value);
      Batch3<T> p = conv1x1_forward(d, block.pw.weight.value, block.pw.bias.value);
      Batch3<T> next = h;
      if (cache) {
        Batch3<T> phi(p.batch(), p.steps(), p.channels());
        for (std::size_t i = 0; i < next.size(); ++i) {
          phi[i] = gaussian_cdf(p[i]);
          next[i] += p[i] * phi[i];
        }
        cache->hidden.push_back(std::move(h));
        cache->dw_out.push_back(std::move(d));
        cache->pre_act.push_back(std::move(p));
        cache->cdf.push_back(std::move(phi));
      } else {
        for (std::size_t i = 0; i < next.size(); ++i) next[i] += gelu(p[i]);
      }
      h = std::move(next);
    }
    Batch3<T> out = conv1x1_forward(h, proj_out_.weight.value, proj_out_.bias.value);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += x[i];
    if (cache) cache->hidden.push_back(std::move(h));
    return out;
  }

  /// Exact gradients of a scalar loss given d(loss)/d(repair).
  Gradients<T> backward(const ForwardCache<T>& cache,
                        const Batch3<T>& grad_repair) const {
    require_dims(cache.hidden.size() == blocks_.size() + 1 &&
                     cache.cdf.size() == blocks_.size() &&
                     cache.input.channels() == shape_.channels,
                 "backward: cache does not match this network");
    require_dims(grad_repair.same_shape(cache.input),
                 "backward: grad_repair has shape " + grad_repair.shape_string() +
                     ", cache input is " + cache.input.shape_string());

    Gradients<T> g;
    g.params.resize(4 * blocks_.size() + 4);
    std::size_t slot = g.params.size();

    auto out_g = conv1x1_backward(cache.hidden.back(), proj_out_.weight.value, grad_repair);
    g.params[--slot] = std::move(out_g.bias);
    g.params[--slot] = std::move(out_g.weight);
    Batch3<T> grad_h = std::move(out_g.input);

    for (std::size_t bi = blocks_.size(); bi-- > 0;) {
      const auto& block = blocks_[bi];
      const Batch3<T>& pre = cache.pre_act[bi];
      // In-block skip: grad_h passes through unchanged and via the branch.
      const Batch3<T>& phi = cache.cdf[bi];
      Batch3<T> grad_pre(pre.batch(), pre.steps(), pre.channels());
      for (std::size_t i = 0; i < pre.size(); ++i) {
        grad_pre[i] = grad_h[i] * (phi[i] + pre[i] * gaussian_pdf(pre[i]));
      }
      auto pw_g = conv1x1_backward(cache.dw_out[bi], block.pw.weight.value, grad_pre);
      auto dw_g = depthwise_conv_backward(cache.hidden[bi], block.dw.weight.value, pw_g.input);
      g.params[--slot] = std::move(pw_g.bias);
      g.params[--slot] = std::move(pw_g.weight);
      g.params[--slot] = std::move(dw_g.bias);
      g.params[--slot] = std::move(dw_g.kernel);
      for (std::size_t i = 0; i < grad_h.size(); ++i) grad_h[i] += dw_g.input[i];
    }

    auto in_g = conv1x1_backward(cache.input, proj_in_.weight.value, grad_h);
    g.params[--slot] = std::move(in_g.bias);
    g.params[--slot] = std::move(in_g.weight);
    // Global skip.
    g.input = std::move(in_g.input);
    for (std::size_t i = 0; i < g.input.size(); ++i) g.input[i] += grad_repair[i];
    return g;
  }

  /// Copies `grads` into the ParamTensor grad buffers.
  void set_gradients(const Gradients<T>& grads) {
    auto params = parameters();
    require_dims(grads.params.size() == params.size(),
                 "set_gradients: gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      require_dims(grads.params[i].same_shape(params[i]->value),
                   "set_gradients: gradient shape mismatch");
      params[i]->grad = grads.params[i];
    }
  }

  void zero_grad() {
    for (auto* p : parameters()) p->grad.fill(T(0));
  }

 private:
  static Layer<T> make_layer(std::size_t rows, std::size_t cols) {
    return {ParamTensor<T>(rows, cols), ParamTensor<T>(1, cols)};
  }

  static void fill_uniform(Layer<T>& layer, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& w : layer.weight.value.values()) w = static_cast<T>(rng.uniform(-bound, bound));
    for (auto& b : layer.bias.value.values()) b = static_cast<T>(rng.uniform(-bound, bound));
  }

  ModelShape shape_;
  Layer<T> proj_in_;
  std::vector<SeparableBlock<T>> blocks_;
  Layer<T> proj_out_;
};

}  // namespace jure
