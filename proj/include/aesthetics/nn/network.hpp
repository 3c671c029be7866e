#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aesthetics/imaging.hpp"
#include "aesthetics/tensor.hpp"

namespace aesthetics::nn {

enum class LayerKind { kConv, kRelu, kMaxPool, kDropout, kFc, kSoftmaxXent };

std::string_view kind_name(LayerKind kind);
LayerKind kind_from_name(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t out_channels = 0;  // conv
  std::size_t kernel = 0;        // conv
  std::size_t window = 0;        // maxpool
  std::size_t stride = 1;        // conv, maxpool
  std::size_t pad = 0;           // conv
  double rate = 0.0;             // dropout
  std::size_t out_features = 0;  // fc
  double lr_multiplier = 1.0;

  static LayerSpec conv(std::size_t out_channels, std::size_t kernel, std::size_t stride, std::size_t pad);
  static LayerSpec relu();
  static LayerSpec maxpool(std::size_t window, std::size_t stride);
  static LayerSpec dropout(double rate);
  static LayerSpec fc(std::size_t out_features);
  static LayerSpec softmax_xent();

  bool has_params() const { return kind == LayerKind::kConv || kind == LayerKind::kFc; }
  bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
  Shape input_shape;  // (3, H, W)
  std::vector<LayerSpec> layers;
  // Preprocessing metadata carried with the weights.
  imaging::ChannelMean input_mean{0.0, 0.0, 0.0};
  std::string model_id;

  // Output shape of every layer; throws ShapeError naming the first layer whose
  // input does not fit.
  std::vector<Shape> layer_output_shapes() const;
  // Shape inference plus the structural rules (final fc has 2 outputs,
  // softmax_xent only in last position, parameter ranges).
  void validate() const;

  std::size_t first_fc_index() const;
  std::size_t last_fc_index() const;

  bool operator==(const NetworkSpec&) const = default;
};

// 3 x side x side input, 5 conv / 3 fc, first fc 256 wide.
NetworkSpec reference_architecture(std::size_t input_side = 64);
// Same topology at 3x16x16 with a few channels per layer, for gradient checks.
NetworkSpec toy_reference_architecture();

template <typename T>
struct ParamBlock {
  BasicTensor<T> weight;  // conv: (out, in, k, k); fc: (out, in)
  BasicTensor<T> bias;    // (out)

  bool empty() const { return weight.empty(); }
};

// One block per layer, empty for layers without parameters.
template <typename T>
using ParamSet = std::vector<ParamBlock<T>>;

struct Parameters {
  ParamSet<float> values;
  ParamSet<float> velocity;  // momentum buffers, same shapes as values
};

template <typename U, typename T>
ParamSet<U> cast_params(const ParamSet<T>& in) {
  ParamSet<U> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i].empty()) continue;
    out[i].weight = in[i].weight.template cast<U>();
    out[i].bias = in[i].bias.template cast<U>();
  }
  return out;
}

// Zero-filled blocks with the shapes `spec` requires.
template <typename T>
ParamSet<T> zero_params(const NetworkSpec& spec);

// He-normal weights N(0, 2 / fan_in), zero biases, zero momentum buffers.
// Counter-based, so the same seed reproduces the same values bit for bit.
Parameters init_params(const NetworkSpec& spec, std::uint64_t seed);
// Re-initialises one layer in place (used when swapping a classifier head).
void reinit_layer(const NetworkSpec& spec, Parameters& params, std::size_t layer, std::uint64_t seed);

void check_params(const NetworkSpec& spec, const ParamSet<float>& values);

enum class Mode { kTrain, kInfer };

template <typename T>
struct ForwardPass {
  Mode mode = Mode::kInfer;
  std::uint64_t seed = 0;
  // activations[0] is the input, activations[l + 1] the output of layer l.
  std::vector<BasicTensor<T>> activations;
  // conv: im2col matrix (positions x patch); empty otherwise.
  std::vector<std::vector<T>> columns;
  // maxpool: flat input index that won each output cell.
  std::vector<std::vector<std::uint32_t>> argmax;
  // dropout: per-element scale (0 or 1 / (1 - rate)); empty in infer mode.
  std::vector<std::vector<T>> dropout_scale;

  const BasicTensor<T>& logits() const { return activations.back(); }
};

template <typename T>
ForwardPass<T> forward(const NetworkSpec& spec, const ParamSet<T>& params, const BasicTensor<T>& input, Mode mode,
                       std::uint64_t rng_seed);

template <typename T>
struct BackwardResult {
  double loss = 0.0;
  ParamSet<T> grads;
};

// Cross-entropy of softmax(logits) at `label`, with gradients for every
// parametric layer. Sums over the cached computation are carried in double.
template <typename T>
BackwardResult<T> backward(const NetworkSpec& spec, const ParamSet<T>& params, const ForwardPass<T>& pass,
                           int label);

extern template ForwardPass<float> forward(const NetworkSpec&, const ParamSet<float>&, const BasicTensor<float>&,
                                           Mode, std::uint64_t);
extern template ForwardPass<double> forward(const NetworkSpec&, const ParamSet<double>&, const BasicTensor<double>&,
                                            Mode, std::uint64_t);
extern template BackwardResult<float> backward(const NetworkSpec&, const ParamSet<float>&, const ForwardPass<float>&,
                                               int);
extern template BackwardResult<double> backward(const NetworkSpec&, const ParamSet<double>&,
                                                const ForwardPass<double>&, int);

struct Probabilities {
  double p0 = 0.5;
  double p1 = 0.5;
};

// Two-way softmax in logistic form; p1 is the aesthetics score.
Probabilities softmax_prob(double z0, double z1);
template <typename T>
Probabilities softmax_prob(const BasicTensor<T>& logits) {
  if (logits.size() != 2) throw ShapeError("softmax_prob expects 2 logits, got " + std::to_string(logits.size()));
  return softmax_prob(static_cast<double>(logits[0]), static_cast<double>(logits[1]));
}

double cross_entropy(double z0, double z1, int label);

// velocity = momentum * velocity + grad; weight -= base_lr * lr_multiplier * velocity.
// Layers whose multiplier is 0 are left untouched, momentum buffer included.
void sgd_step(Parameters& params, const ParamSet<float>& grads, double base_lr, double momentum,
              const NetworkSpec& spec);

// Flattened infer-mode activation after `layer_index`.
Tensor extract_features(const NetworkSpec& spec, const ParamSet<float>& params, const Tensor& input,
                        std::size_t layer_index);

// Infer-mode logits for a single (3, H, W) input or a (N, 3, H, W) batch; the
// result is (2) or (N, 2) respectively.
Tensor infer_logits(const NetworkSpec& spec, const ParamSet<float>& params, const Tensor& input);

// Resize to the network input and subtract the stored channel mean.
Tensor preprocess(const NetworkSpec& spec, const imaging::Image& image);

}  // namespace aesthetics::nn
