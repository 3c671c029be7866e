#include <cmath>

#include "aesthetics/error.hpp"
#include "aesthetics/nn/network.hpp"

namespace aesthetics::nn {

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kFc: return "fc";
    case LayerKind::kSoftmaxXent: return "softmax_xent";
  }
  return "unknown";
}

LayerKind kind_from_name(std::string_view name) {
  for (auto k : {LayerKind::kConv, LayerKind::kRelu, LayerKind::kMaxPool, LayerKind::kDropout, LayerKind::kFc,
                 LayerKind::kSoftmaxXent}) {
    if (kind_name(k) == name) return k;
  }
  throw ValidationError("unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::conv(std::size_t out_channels, std::size_t kernel, std::size_t stride, std::size_t pad) {
  LayerSpec l;
  l.kind = LayerKind::kConv;
  l.out_channels = out_channels;
  l.kernel = kernel;
  l.stride = stride;
  l.pad = pad;
  return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::maxpool(std::size_t window, std::size_t stride) {
  LayerSpec l;
  l.kind = LayerKind::kMaxPool;
  l.window = window;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec l;
  l.kind = LayerKind::kDropout;
  l.rate = rate;
  return l;
}

LayerSpec LayerSpec::fc(std::size_t out_features) {
  LayerSpec l;
  l.kind = LayerKind::kFc;
  l.out_features = out_features;
  return l;
}

LayerSpec LayerSpec::softmax_xent() {
  LayerSpec l;
  l.kind = LayerKind::kSoftmaxXent;
  return l;
}

namespace {

std::string layer_label(std::size_t index, const LayerSpec& layer) {
  return "layer " + std::to_string(index) + " (" + std::string(kind_name(layer.kind)) + ")";
}

void check_layer_params(std::size_t index, const LayerSpec& l) {
  auto fail = [&](const std::string& what) { throw ValidationError(layer_label(index, l) + ": " + what); };
  if (!(l.lr_multiplier >= 0.0) || !std::isfinite(l.lr_multiplier)) fail("lr_multiplier must be >= 0");
  switch (l.kind) {
    case LayerKind::kConv:
      if (l.out_channels < 1) fail("out_channels must be >= 1");
      if (l.kernel < 1) fail("kernel must be >= 1");
      if (l.stride < 1) fail("stride must be >= 1");
      break;
    case LayerKind::kMaxPool:
      if (l.window < 1) fail("window must be >= 1");
      if (l.stride < 1) fail("stride must be >= 1");
      break;
    case LayerKind::kDropout:
      if (!(l.rate >= 0.0 && l.rate < 1.0)) fail("rate must lie in [0, 1)");
      break;
    case LayerKind::kFc:
      if (l.out_features < 1) fail("out_features must be >= 1");
      break;
    default:
      break;
  }
}

}  // namespace

std::vector<Shape> NetworkSpec::layer_output_shapes() const {
  if (input_shape.size() != 3 || input_shape[0] != 3 || input_shape[1] == 0 || input_shape[2] == 0) {
    throw ShapeError("input shape must be (3, H, W), got " + shape_string(input_shape));
  }
  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  Shape current = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    check_layer_params(i, l);
    auto fail = [&](const std::string& what) {
      throw ShapeError(layer_label(i, l) + ": " + what + ", input " + shape_string(current));
    };
    switch (l.kind) {
      case LayerKind::kConv: {
        if (current.size() != 3) fail("expects a (C, H, W) input");
        const auto h = current[1] + 2 * l.pad;
        const auto w = current[2] + 2 * l.pad;
        if (h < l.kernel || w < l.kernel) fail("kernel larger than padded input");
        current = {l.out_channels, (h - l.kernel) / l.stride + 1, (w - l.kernel) / l.stride + 1};
        break;
      }
      case LayerKind::kMaxPool: {
        if (current.size() != 3) fail("expects a (C, H, W) input");
        if (current[1] < l.window || current[2] < l.window) fail("window larger than input");
        current = {current[0], (current[1] - l.window) / l.stride + 1, (current[2] - l.window) / l.stride + 1};
        break;
      }
      case LayerKind::kFc:
        current = {l.out_features};
        break;
      case LayerKind::kRelu:
      case LayerKind::kDropout:
      case LayerKind::kSoftmaxXent:
        break;
    }
    shapes.push_back(current);
  }
  return shapes;
}

void NetworkSpec::validate() const {
  const auto shapes = layer_output_shapes();
  if (layers.empty()) throw ValidationError("network has no layers");
  std::optional<std::size_t> last_fc;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::kFc) last_fc = i;
    if (layers[i].kind == LayerKind::kSoftmaxXent && i + 1 != layers.size()) {
      throw ValidationError(layer_label(i, layers[i]) + ": softmax_xent must be the last layer");
    }
  }
  if (!last_fc) throw ValidationError("network needs a final fc layer");
  if (layers[*last_fc].out_features != 2) {
    throw ValidationError(layer_label(*last_fc, layers[*last_fc]) + ": final fc must have 2 outputs");
  }
  for (std::size_t i = *last_fc + 1; i < layers.size(); ++i) {
    if (layers[i].kind != LayerKind::kSoftmaxXent) {
      throw ValidationError(layer_label(i, layers[i]) + ": only softmax_xent may follow the final fc");
    }
  }
}

std::size_t NetworkSpec::first_fc_index() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::kFc) return i;
  }
  throw ValidationError("network has no fc layer");
}

std::size_t NetworkSpec::last_fc_index() const {
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (layers[i].kind == LayerKind::kFc) return i;
  }
  throw ValidationError("network has no fc layer");
}

NetworkSpec reference_architecture(std::size_t input_side) {
  NetworkSpec spec;
  spec.input_shape = {3, input_side, input_side};
  spec.model_id = "aesthetics-ref";
  spec.layers = {
      LayerSpec::conv(16, 5, 1, 2), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
      LayerSpec::conv(32, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
      LayerSpec::conv(48, 3, 1, 1), LayerSpec::relu(),
      LayerSpec::conv(48, 3, 1, 1), LayerSpec::relu(),
      LayerSpec::conv(32, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
      LayerSpec::fc(256), LayerSpec::relu(), LayerSpec::dropout(0.5),
      LayerSpec::fc(128), LayerSpec::relu(), LayerSpec::dropout(0.5),
      LayerSpec::fc(2),
  };
  return spec;
}

NetworkSpec toy_reference_architecture() {
  NetworkSpec spec;
  spec.input_shape = {3, 16, 16};
  spec.model_id = "aesthetics-toy";
  spec.layers = {
      LayerSpec::conv(4, 5, 1, 2), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
      LayerSpec::conv(6, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
      LayerSpec::conv(6, 3, 1, 1), LayerSpec::relu(),
      LayerSpec::conv(6, 3, 1, 1), LayerSpec::relu(),
      LayerSpec::conv(4, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
      LayerSpec::fc(12), LayerSpec::relu(), LayerSpec::dropout(0.5),
      LayerSpec::fc(8), LayerSpec::relu(), LayerSpec::dropout(0.5),
      LayerSpec::fc(2),
  };
  return spec;
}

}  // namespace aesthetics::nn
