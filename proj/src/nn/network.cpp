#include "aesthetics/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <type_traits>

#include "aesthetics/error.hpp"
#include "aesthetics/simd/kernels.hpp"
#include "aesthetics/util.hpp"

namespace aesthetics::nn {

namespace {

// Float goes through the dispatched kernels; double (gradient checking) uses
// plain loops with the same double accumulation.
template <typename T>
void gemm_abt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
  if constexpr (std::is_same_v<T, float>) {
    simd::active_kernels().gemm_abt(a, b, c, m, n, k);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += static_cast<double>(a[i * k + p]) * b[j * k + p];
        c[i * n + j] = static_cast<T>(acc);
      }
    }
  }
}

template <typename T>
void relu_forward(const T* in, T* out, std::size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    simd::active_kernels().relu(in, out, n);
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
  }
}

template <typename T>
void relu_backward(const T* pre, const T* grad_out, T* grad_in, std::size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    simd::active_kernels().relu_backward(pre, grad_out, grad_in, n);
  } else {
    for (std::size_t i = 0; i < n; ++i) grad_in[i] = pre[i] > T{0} ? grad_out[i] : T{0};
  }
}

template <typename T>
std::vector<T> transpose(const T* src, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  }
  return out;
}

std::string layer_label(std::size_t index, const LayerSpec& layer) {
  return "layer " + std::to_string(index) + " (" + std::string(kind_name(layer.kind)) + ")";
}

struct ConvGeometry {
  std::size_t in_c, in_h, in_w, out_c, out_h, out_w, k, stride, pad;

  std::size_t patch() const { return in_c * k * k; }
  std::size_t positions() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Shape& in, const Shape& out, const LayerSpec& l) {
  return {in[0], in[1], in[2], out[0], out[1], out[2], l.kernel, l.stride, l.pad};
}

// columns is (positions x patch), one row per output position.
template <typename T>
void im2col(const T* in, const ConvGeometry& g, std::vector<T>& columns) {
  const std::size_t patch = g.patch();
  columns.assign(g.positions() * patch, T{0});
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      T* row = columns.data() + (oy * g.out_w + ox) * patch;
      for (std::size_t c = 0; c < g.in_c; ++c) {
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            row[(c * g.k + ky) * g.k + kx] =
                in[(c * g.in_h + static_cast<std::size_t>(y)) * g.in_w + static_cast<std::size_t>(x)];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_accumulate(const T* dcolumns, const ConvGeometry& g, std::vector<double>& dx) {
  const std::size_t patch = g.patch();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const T* row = dcolumns + (oy * g.out_w + ox) * patch;
      for (std::size_t c = 0; c < g.in_c; ++c) {
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            dx[(c * g.in_h + static_cast<std::size_t>(y)) * g.in_w + static_cast<std::size_t>(x)] +=
                static_cast<double>(row[(c * g.k + ky) * g.k + kx]);
          }
        }
      }
    }
  }
}

Shape param_weight_shape(const LayerSpec& l, const Shape& in) {
  if (l.kind == LayerKind::kConv) return {l.out_channels, in[0], l.kernel, l.kernel};
  return {l.out_features, shape_size(in)};
}

Shape param_bias_shape(const LayerSpec& l) {
  return {l.kind == LayerKind::kConv ? l.out_channels : l.out_features};
}

template <typename T>
void check_param_shapes(const NetworkSpec& spec, const std::vector<Shape>& shapes, const ParamSet<T>& params) {
  if (params.size() != spec.layers.size()) {
    throw ShapeError("parameter set has " + std::to_string(params.size()) + " blocks, network has " +
                     std::to_string(spec.layers.size()) + " layers");
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (!l.has_params()) {
      if (!params[i].empty()) throw ShapeError(layer_label(i, l) + ": unexpected parameters");
      continue;
    }
    const Shape& in = i == 0 ? spec.input_shape : shapes[i - 1];
    const auto ws = param_weight_shape(l, in);
    const auto bs = param_bias_shape(l);
    if (params[i].weight.shape() != ws || params[i].bias.shape() != bs) {
      throw ShapeError(layer_label(i, l) + ": parameters " + shape_string(params[i].weight.shape()) + "/" +
                       shape_string(params[i].bias.shape()) + " do not match expected " + shape_string(ws) + "/" +
                       shape_string(bs));
    }
  }
}

// Standard normal from two counter hashes (Box-Muller).
double counter_normal(std::uint64_t key) {
  const double u1 = (static_cast<double>(util::splitmix64(key) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = util::unit_interval(util::splitmix64(key ^ 0xa0761d6478bd642fULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void fill_he_normal(ParamBlock<float>& block, std::size_t fan_in, std::uint64_t layer_key) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < block.weight.size(); ++i) {
    block.weight[i] = static_cast<float>(stddev * counter_normal(util::mix(layer_key, i)));
  }
  block.bias.fill(0.0f);
}

}  // namespace

template <typename T>
ParamSet<T> zero_params(const NetworkSpec& spec) {
  const auto shapes = spec.layer_output_shapes();
  ParamSet<T> out(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (!l.has_params()) continue;
    const Shape& in = i == 0 ? spec.input_shape : shapes[i - 1];
    out[i].weight = BasicTensor<T>(param_weight_shape(l, in));
    out[i].bias = BasicTensor<T>(param_bias_shape(l));
  }
  return out;
}

template ParamSet<float> zero_params(const NetworkSpec&);
template ParamSet<double> zero_params(const NetworkSpec&);

void check_params(const NetworkSpec& spec, const ParamSet<float>& values) {
  check_param_shapes(spec, spec.layer_output_shapes(), values);
}

Parameters init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Parameters p;
  p.values = zero_params<float>(spec);
  p.velocity = zero_params<float>(spec);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (p.values[i].empty()) continue;
    const auto& w = p.values[i].weight;
    fill_he_normal(p.values[i], w.size() / w.shape()[0], util::mix(seed, i));
  }
  return p;
}

void reinit_layer(const NetworkSpec& spec, Parameters& params, std::size_t layer, std::uint64_t seed) {
  if (layer >= spec.layers.size() || !spec.layers[layer].has_params()) {
    throw ValidationError("layer " + std::to_string(layer) + " has no parameters to re-initialise");
  }
  auto& block = params.values[layer];
  fill_he_normal(block, block.weight.size() / block.weight.shape()[0], util::mix(seed, layer));
  params.velocity[layer].weight.fill(0.0f);
  params.velocity[layer].bias.fill(0.0f);
}

template <typename T>
ForwardPass<T> forward(const NetworkSpec& spec, const ParamSet<T>& params, const BasicTensor<T>& input, Mode mode,
                       std::uint64_t rng_seed) {
  const auto shapes = spec.layer_output_shapes();
  if (input.shape() != spec.input_shape) {
    const std::string first = spec.layers.empty() ? "input" : layer_label(0, spec.layers[0]);
    throw ShapeError(first + ": expected input " + shape_string(spec.input_shape) + ", got " +
                     shape_string(input.shape()));
  }
  check_param_shapes(spec, shapes, params);

  const std::size_t n_layers = spec.layers.size();
  ForwardPass<T> pass;
  pass.mode = mode;
  pass.seed = rng_seed;
  pass.activations.reserve(n_layers + 1);
  pass.activations.push_back(input);
  pass.columns.resize(n_layers);
  pass.argmax.resize(n_layers);
  pass.dropout_scale.resize(n_layers);

  for (std::size_t li = 0; li < n_layers; ++li) {
    const auto& l = spec.layers[li];
    const auto& x = pass.activations[li];
    BasicTensor<T> y(shapes[li]);
    switch (l.kind) {
      case LayerKind::kConv: {
        const auto g = conv_geometry(x.shape(), shapes[li], l);
        im2col(x.data(), g, pass.columns[li]);
        gemm_abt(params[li].weight.data(), pass.columns[li].data(), y.data(), g.out_c, g.positions(), g.patch());
        for (std::size_t c = 0; c < g.out_c; ++c) {
          const T b = params[li].bias[c];
          T* plane = y.data() + c * g.positions();
          for (std::size_t p = 0; p < g.positions(); ++p) plane[p] += b;
        }
        break;
      }
      case LayerKind::kRelu:
        relu_forward(x.data(), y.data(), x.size());
        break;
      case LayerKind::kMaxPool: {
        const auto& in = x.shape();
        const auto& out = shapes[li];
        auto& arg = pass.argmax[li];
        arg.resize(y.size());
        for (std::size_t c = 0; c < out[0]; ++c) {
          for (std::size_t oy = 0; oy < out[1]; ++oy) {
            for (std::size_t ox = 0; ox < out[2]; ++ox) {
              std::size_t best = (c * in[1] + oy * l.stride) * in[2] + ox * l.stride;
              for (std::size_t ky = 0; ky < l.window; ++ky) {
                for (std::size_t kx = 0; kx < l.window; ++kx) {
                  const std::size_t idx = (c * in[1] + oy * l.stride + ky) * in[2] + ox * l.stride + kx;
                  // strict > keeps the first maximum in scan order
                  if (x[idx] > x[best]) best = idx;
                }
              }
              const std::size_t o = (c * out[1] + oy) * out[2] + ox;
              arg[o] = static_cast<std::uint32_t>(best);
              y[o] = x[best];
            }
          }
        }
        break;
      }
      case LayerKind::kDropout: {
        if (mode == Mode::kInfer || l.rate == 0.0) {
          y = x;
          break;
        }
        auto& scale = pass.dropout_scale[li];
        scale.resize(x.size());
        const T keep_scale = static_cast<T>(1.0 / (1.0 - l.rate));
        const std::uint64_t key = util::mix(rng_seed, li);
        for (std::size_t i = 0; i < x.size(); ++i) {
          const bool keep = util::unit_interval(util::mix(key, i)) >= l.rate;
          scale[i] = keep ? keep_scale : T{0};
          y[i] = x[i] * scale[i];
        }
        break;
      }
      case LayerKind::kFc: {
        const std::size_t in_features = x.size();
        gemm_abt(x.data(), params[li].weight.data(), y.data(), 1, l.out_features, in_features);
        for (std::size_t o = 0; o < l.out_features; ++o) y[o] += params[li].bias[o];
        break;
      }
      case LayerKind::kSoftmaxXent:
        y = x;
        break;
    }
    pass.activations.push_back(std::move(y));
  }
  return pass;
}

template <typename T>
BackwardResult<T> backward(const NetworkSpec& spec, const ParamSet<T>& params, const ForwardPass<T>& pass,
                           int label) {
  const std::size_t n_layers = spec.layers.size();
  if (pass.activations.size() != n_layers + 1) {
    throw UsageError("backward needs the cache of a forward pass over the same network");
  }
  if (label != 0 && label != 1) throw DomainError("label must be 0 or 1");

  const auto& logits = pass.logits();
  const double z0 = logits[0];
  const double z1 = logits[1];
  const auto probs = softmax_prob(z0, z1);

  BackwardResult<T> result;
  result.loss = cross_entropy(z0, z1, label);
  result.grads = zero_params<T>(spec);

  BasicTensor<T> grad(logits.shape());
  grad[0] = static_cast<T>(probs.p0 - (label == 0 ? 1.0 : 0.0));
  grad[1] = static_cast<T>(probs.p1 - (label == 1 ? 1.0 : 0.0));

  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& l = spec.layers[li];
    const auto& x = pass.activations[li];
    const bool need_input_grad = li > 0;
    BasicTensor<T> dx;
    switch (l.kind) {
      case LayerKind::kSoftmaxXent:
        dx = grad;
        break;
      case LayerKind::kRelu:
        dx = BasicTensor<T>(x.shape());
        relu_backward(x.data(), grad.data(), dx.data(), x.size());
        break;
      case LayerKind::kDropout:
        dx = grad;
        if (!pass.dropout_scale[li].empty()) {
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= pass.dropout_scale[li][i];
        }
        break;
      case LayerKind::kMaxPool: {
        std::vector<double> acc(x.size(), 0.0);
        const auto& arg = pass.argmax[li];
        for (std::size_t o = 0; o < grad.size(); ++o) acc[arg[o]] += static_cast<double>(grad[o]);
        dx = BasicTensor<T>(x.shape(), std::vector<T>(acc.begin(), acc.end()));
        break;
      }
      case LayerKind::kFc: {
        const std::size_t in_features = x.size();
        auto& g = result.grads[li];
        for (std::size_t o = 0; o < l.out_features; ++o) {
          const T dy = grad[o];
          g.bias[o] = dy;
          T* row = g.weight.data() + o * in_features;
          for (std::size_t i = 0; i < in_features; ++i) row[i] = dy * x[i];
        }
        if (need_input_grad) {
          std::vector<double> acc(in_features, 0.0);
          const T* w = params[li].weight.data();
          for (std::size_t o = 0; o < l.out_features; ++o) {
            const double dy = grad[o];
            const T* row = w + o * in_features;
            for (std::size_t i = 0; i < in_features; ++i) acc[i] += dy * static_cast<double>(row[i]);
          }
          dx = BasicTensor<T>(x.shape(), std::vector<T>(acc.begin(), acc.end()));
        }
        break;
      }
      case LayerKind::kConv: {
        const auto g = conv_geometry(x.shape(), grad.shape(), l);
        const std::size_t positions = g.positions();
        const std::size_t patch = g.patch();
        auto& pg = result.grads[li];
        for (std::size_t c = 0; c < g.out_c; ++c) {
          double acc = 0.0;
          const T* plane = grad.data() + c * positions;
          for (std::size_t p = 0; p < positions; ++p) acc += plane[p];
          pg.bias[c] = static_cast<T>(acc);
        }
        // dW (out_c x patch) = dY (out_c x positions) * columns (positions x patch)
        const auto columns_t = transpose(pass.columns[li].data(), positions, patch);
        gemm_abt(grad.data(), columns_t.data(), pg.weight.data(), g.out_c, patch, positions);
        if (need_input_grad) {
          // dcolumns (positions x patch) = dY^T (positions x out_c) * W (out_c x patch)
          const auto grad_t = transpose(grad.data(), g.out_c, positions);
          const auto weight_t = transpose(params[li].weight.data(), g.out_c, patch);
          std::vector<T> dcolumns(positions * patch);
          gemm_abt(grad_t.data(), weight_t.data(), dcolumns.data(), positions, patch, g.out_c);
          std::vector<double> acc(x.size(), 0.0);
          col2im_accumulate(dcolumns.data(), g, acc);
          dx = BasicTensor<T>(x.shape(), std::vector<T>(acc.begin(), acc.end()));
        }
        break;
      }
    }
    if (!need_input_grad) break;
    grad = std::move(dx);
  }
  return result;
}

template ForwardPass<float> forward(const NetworkSpec&, const ParamSet<float>&, const BasicTensor<float>&, Mode,
                                    std::uint64_t);
template ForwardPass<double> forward(const NetworkSpec&, const ParamSet<double>&, const BasicTensor<double>&, Mode,
                                     std::uint64_t);
template BackwardResult<float> backward(const NetworkSpec&, const ParamSet<float>&, const ForwardPass<float>&, int);
template BackwardResult<double> backward(const NetworkSpec&, const ParamSet<double>&, const ForwardPass<double>&,
                                         int);

// Logistic form of the two-way softmax: p1 is a function of z1 - z0 alone, and
// exp overflowing to infinity just drives the matching probability to 0.
Probabilities softmax_prob(double z0, double z1) {
  const double d = z1 - z0;
  return {1.0 / (1.0 + std::exp(d)), 1.0 / (1.0 + std::exp(-d))};
}

double cross_entropy(double z0, double z1, int label) {
  if (label != 0 && label != 1) throw DomainError("label must be 0 or 1");
  const double m = std::max(z0, z1);
  const double log_sum = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
  return log_sum - (label == 0 ? z0 : z1);
}

void sgd_step(Parameters& params, const ParamSet<float>& grads, double base_lr, double momentum,
              const NetworkSpec& spec) {
  if (!(base_lr > 0.0)) throw DomainError("base_lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
  if (grads.size() != spec.layers.size() || params.values.size() != spec.layers.size() ||
      params.velocity.size() != spec.layers.size()) {
    throw ShapeError("gradient/parameter block count does not match the network");
  }
  const auto& k = simd::active_kernels();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    auto& w = params.values[i];
    if (w.empty()) continue;
    const auto& g = grads[i];
    auto& v = params.velocity[i];
    if (g.weight.shape() != w.weight.shape() || g.bias.shape() != w.bias.shape() ||
        v.weight.shape() != w.weight.shape() || v.bias.shape() != w.bias.shape()) {
      throw ShapeError(layer_label(i, spec.layers[i]) + ": gradient shape does not match parameters");
    }
    const double multiplier = spec.layers[i].lr_multiplier;
    if (multiplier == 0.0) continue;
    const auto step = static_cast<float>(base_lr * multiplier);
    const auto m = static_cast<float>(momentum);
    k.momentum_step(w.weight.data(), v.weight.data(), g.weight.data(), w.weight.size(), m, step);
    k.momentum_step(w.bias.data(), v.bias.data(), g.bias.data(), w.bias.size(), m, step);
  }
}

Tensor extract_features(const NetworkSpec& spec, const ParamSet<float>& params, const Tensor& input,
                        std::size_t layer_index) {
  if (layer_index >= spec.layers.size()) {
    throw DomainError("layer index " + std::to_string(layer_index) + " out of range (network has " +
                      std::to_string(spec.layers.size()) + " layers)");
  }
  auto pass = forward(spec, params, input, Mode::kInfer, 0);
  auto out = std::move(pass.activations[layer_index + 1]);
  out.reshape({out.size()});
  return out;
}

Tensor infer_logits(const NetworkSpec& spec, const ParamSet<float>& params, const Tensor& input) {
  if (input.rank() == 4) {
    const std::size_t n = input.shape()[0];
    const Shape sample_shape(input.shape().begin() + 1, input.shape().end());
    const std::size_t stride = shape_size(sample_shape);
    Tensor out({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
      Tensor sample(sample_shape,
                    std::vector<float>(input.data() + i * stride, input.data() + (i + 1) * stride));
      const auto pass = forward(spec, params, sample, Mode::kInfer, 0);
      out[i * 2] = pass.logits()[0];
      out[i * 2 + 1] = pass.logits()[1];
    }
    return out;
  }
  return forward(spec, params, input, Mode::kInfer, 0).logits();
}

Tensor preprocess(const NetworkSpec& spec, const imaging::Image& image) {
  if (spec.input_shape.size() != 3) throw ShapeError("network input must be (3, H, W)");
  const auto resized = imaging::resize_bilinear(image, spec.input_shape[2], spec.input_shape[1]);
  return imaging::to_tensor(resized, spec.input_mean);
}

}  // namespace aesthetics::nn
