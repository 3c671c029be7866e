#include "aesthetics/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>

#include "aesthetics/error.hpp"

namespace aesthetics::nn {

namespace {

// Which branch every max-pool and ReLU took; equal signatures mean the loss is
// smooth between the two probes.
std::vector<std::uint8_t> routing_signature(const NetworkSpec& spec, const ForwardPass<double>& pass) {
  std::vector<std::uint8_t> sig;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const auto kind = spec.layers[li].kind;
    if (kind == LayerKind::kRelu) {
      for (double v : pass.activations[li].values()) sig.push_back(v > 0.0 ? 1 : 0);
    } else if (kind == LayerKind::kMaxPool) {
      for (auto idx : pass.argmax[li]) {
        for (int b = 0; b < 4; ++b) sig.push_back(static_cast<std::uint8_t>(idx >> (8 * b)));
      }
    }
  }
  return sig;
}

}  // namespace

ParamSet<double> analytic_gradient(const NetworkSpec& spec, const ParamSet<float>& params, const Tensor& input,
                                   int label, std::uint64_t seed, Precision precision) {
  if (precision == Precision::kFloat32) {
    const auto pass = forward(spec, params, input, Mode::kTrain, seed);
    return cast_params<double>(backward(spec, params, pass, label).grads);
  }
  const auto params64 = cast_params<double>(params);
  const auto input64 = input.cast<double>();
  const auto pass = forward(spec, params64, input64, Mode::kTrain, seed);
  return backward(spec, params64, pass, label).grads;
}

GradientCheckResult gradient_check(const NetworkSpec& spec, const ParamSet<float>& params, const Tensor& input,
                                   int label, const GradientCheckOptions& options) {
  if (!(options.epsilon > 0.0)) throw DomainError("epsilon must be positive");
  const auto analytic = options.analytic
                            ? options.analytic(spec, params, input, label, options.dropout_seed)
                            : analytic_gradient(spec, params, input, label, options.dropout_seed, options.precision);
  if (analytic.size() != params.size()) throw ShapeError("analytic gradient does not match parameter layout");

  auto probe = cast_params<double>(params);
  const auto input64 = input.cast<double>();
  auto loss_at = [&](std::vector<std::uint8_t>* signature) {
    const auto pass = forward(spec, probe, input64, Mode::kTrain, options.dropout_seed);
    if (signature) *signature = routing_signature(spec, pass);
    return cross_entropy(pass.logits()[0], pass.logits()[1], label);
  };

  GradientCheckResult result;
  std::vector<std::uint8_t> sig_plus, sig_minus;
  for (std::size_t li = 0; li < params.size(); ++li) {
    if (params[li].empty()) continue;
    for (int which = 0; which < 2; ++which) {
      const bool is_bias = which == 1;
      auto& values = is_bias ? probe[li].bias : probe[li].weight;
      const auto& grad = is_bias ? analytic[li].bias : analytic[li].weight;
      if (grad.size() != values.size()) throw ShapeError("analytic gradient does not match parameter layout");

      TensorReport report{li, is_bias, 0, 0, 0.0};
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double original = values[i];
        values[i] = original + options.epsilon;
        const double plus = loss_at(&sig_plus);
        values[i] = original - options.epsilon;
        const double minus = loss_at(&sig_minus);
        values[i] = original;
        if (sig_plus != sig_minus) {
          ++report.skipped;
          continue;
        }
        const double numeric = (plus - minus) / (2.0 * options.epsilon);
        const double a = grad[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        report.max_relative_error = std::max(report.max_relative_error, std::abs(a - numeric) / denom);
        ++report.checked;
      }
      result.checked += report.checked;
      result.skipped += report.skipped;
      result.max_relative_error = std::max(result.max_relative_error, report.max_relative_error);
      result.tensors.push_back(report);
    }
  }
  return result;
}

}  // namespace aesthetics::nn
