#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aesthetics/baselines/features.hpp"

namespace aesthetics::baselines {

double rbf_kernel(std::span<const float> x, std::span<const float> y, double gamma);

struct SvmModel {
  FeatureMatrix support_vectors;
  std::vector<double> dual_coef;  // alpha_i * y_i, y in {-1, +1}
  double bias = 0.0;
  double gamma = 0.0;
  double C = 0.0;
  // Solver diagnostics: final maximal-violating-pair gap and iteration count.
  double kkt_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct SvmParams {
  double C = 10.0;
  double gamma = 1e-6;
  double tol = 1e-3;
  std::size_t max_passes = 100;  // iteration cap = max_passes * max(n_samples, 100)
};

// 1 / (n_features * variance of all entries), the usual scale-aware default
// when features are not standardised.
double scale_gamma(const FeatureMatrix& features);

// Dual SMO over the full kernel matrix. Working pair = maximal violating pair
// (largest -y*grad in the up set, smallest in the low set); ties go to the
// lower sample index, so runs are deterministic. Stops when the pair's gap
// drops below tol.
SvmModel svm_train(const FeatureMatrix& features, std::span<const int> labels, const SvmParams& params);

struct SvmPrediction {
  int label = 0;
  double margin = 0.0;  // f(x); label is 1 iff margin > 0
};

SvmPrediction svm_predict(const SvmModel& model, std::span<const float> x);

// Per-sample KKT violation of a trained model on its training data, computed
// from scratch (independent of the solver's gradient bookkeeping).
double svm_kkt_residual(const SvmModel& model, const FeatureMatrix& features, std::span<const int> labels,
                        std::span<const double> alphas);

std::string svm_to_json(const SvmModel& model);
SvmModel svm_from_json(std::string_view text);

// Same as svm_train, also returning the full per-sample alpha vector.
SvmModel svm_train_with_alphas(const FeatureMatrix& features, std::span<const int> labels, const SvmParams& params,
                               std::vector<double>& alphas);

}  // namespace aesthetics::baselines
