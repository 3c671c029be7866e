#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aesthetics/nn/network.hpp"

namespace aesthetics::nn {

enum class Precision {
  kFloat32,  // analytic gradient from the float production path
  kFloat64,  // analytic gradient from the double instantiation
};

// Analytic gradient supplier, returned in double. The default runs
// forward/backward at the requested precision; tests substitute a broken one
// to make sure the harness notices.
using AnalyticGradientFn = std::function<ParamSet<double>(const NetworkSpec&, const ParamSet<float>&,
                                                          const Tensor& input, int label, std::uint64_t seed)>;

struct GradientCheckOptions {
  double epsilon = 1e-3;
  Precision precision = Precision::kFloat64;
  // Dropout mask seed; the pass runs in train mode so dropout is exercised.
  std::uint64_t dropout_seed = 1;
  AnalyticGradientFn analytic;  // empty: use backward()
};

struct TensorReport {
  std::size_t layer = 0;
  bool is_bias = false;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double max_relative_error = 0.0;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  // Entries whose +/- epsilon probes changed a max-pool winner or a ReLU gate;
  // central differences are meaningless across such a kink.
  std::size_t skipped = 0;
  std::vector<TensorReport> tensors;
};

// max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
// numeric from central differences of the double-precision loss evaluated
// at the (float-stored) parameter values.
GradientCheckResult gradient_check(const NetworkSpec& spec, const ParamSet<float>& params, const Tensor& input,
                                   int label, const GradientCheckOptions& options = {});

ParamSet<double> analytic_gradient(const NetworkSpec& spec, const ParamSet<float>& params, const Tensor& input,
                                   int label, std::uint64_t seed, Precision precision);

}  // namespace aesthetics::nn
