#include "aesthetics/baselines/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "aesthetics/error.hpp"

namespace aesthetics::baselines {

namespace {

constexpr double kTau = 1e-12;

void check_labels(std::span<const int> labels, std::size_t rows) {
  if (labels.size() != rows) throw ShapeError("label count does not match feature rows");
  bool has0 = false, has1 = false;
  for (int l : labels) {
    if (l == 0) {
      has0 = true;
    } else if (l == 1) {
      has1 = true;
    } else {
      throw DomainError("labels must be 0 or 1");
    }
  }
  if (!has0 || !has1) throw DomainError("training data must contain both classes");
}

}  // namespace

double rbf_kernel(std::span<const float> x, std::span<const float> y, double gamma) {
  if (x.size() != y.size()) throw ShapeError("rbf_kernel: vectors differ in length");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

SvmModel svm_train_with_alphas(const FeatureMatrix& features, std::span<const int> labels, const SvmParams& params,
                               std::vector<double>& alpha) {
  const std::size_t n = features.rows;
  if (n < 2) throw DomainError("svm_train needs at least 2 samples");
  check_labels(labels, n);
  if (!(params.C > 0.0) || !(params.gamma > 0.0) || !(params.tol > 0.0)) {
    throw DomainError("C, gamma and tol must be positive");
  }
  const double C = params.C;

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;

  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    K[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      K[i * n + j] = K[j * n + i] = rbf_kernel(features.row(i), features.row(j), params.gamma);
    }
  }
  auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K[i * n + j]; };

  alpha.assign(n, 0.0);
  std::vector<double> G(n, -1.0);  // gradient of 1/2 a'Qa - e'a

  auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
  auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

  SvmModel model;
  model.C = C;
  model.gamma = params.gamma;
  const std::size_t max_iter = std::max<std::size_t>(params.max_passes, 1) * std::max<std::size_t>(n, 100);

  std::size_t iter = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (; iter < max_iter; ++iter) {
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * G[t];
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    gap = g_max - g_min;
    if (i == n || j == n || gap < params.tol) break;

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * dai + Q(t, j) * daj;
  }
  model.iterations = iter;
  model.kkt_gap = gap;
  model.converged = gap < params.tol;

  // rho: mean of y*G over free vectors, else midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yG = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) {
        ub = std::min(ub, yG);
      } else {
        lb = std::max(lb, yG);
      }
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) {
        ub = std::min(ub, yG);
      } else {
        lb = std::max(lb, yG);
      }
    } else {
      ++n_free;
      sum_free += yG;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  model.bias = -rho;

  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0) {
      model.support_vectors.append_row(features.row(t));
      model.dual_coef.push_back(alpha[t] * y[t]);
    }
  }
  if (model.support_vectors.rows == 0) model.support_vectors.cols = features.cols;
  return model;
}

double scale_gamma(const FeatureMatrix& features) {
  if (features.data.empty()) throw DomainError("scale_gamma needs a non-empty matrix");
  double mean = 0.0;
  for (float v : features.data) mean += v;
  mean /= static_cast<double>(features.data.size());
  double var = 0.0;
  for (float v : features.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(features.data.size());
  if (!(var > 0.0)) return 1.0 / static_cast<double>(features.cols);
  return 1.0 / (static_cast<double>(features.cols) * var);
}

SvmModel svm_train(const FeatureMatrix& features, std::span<const int> labels, const SvmParams& params) {
  std::vector<double> alphas;
  return svm_train_with_alphas(features, labels, params, alphas);
}

SvmPrediction svm_predict(const SvmModel& model, std::span<const float> x) {
  if (x.size() != model.support_vectors.cols) {
    throw ShapeError("svm_predict: expected " + std::to_string(model.support_vectors.cols) + " features, got " +
                     std::to_string(x.size()));
  }
  double f = model.bias;
  for (std::size_t i = 0; i < model.dual_coef.size(); ++i) {
    f += model.dual_coef[i] * rbf_kernel(model.support_vectors.row(i), x, model.gamma);
  }
  return {f > 0.0 ? 1 : 0, f};
}

double svm_kkt_residual(const SvmModel& model, const FeatureMatrix& features, std::span<const int> labels,
                        std::span<const double> alphas) {
  double worst = 0.0;
  for (std::size_t i = 0; i < features.rows; ++i) {
    const double y = labels[i] == 1 ? 1.0 : -1.0;
    const double r = y * svm_predict(model, features.row(i)).margin - 1.0;
    double violation = 0.0;
    if (alphas[i] <= 0.0) {
      violation = std::max(0.0, -r);
    } else if (alphas[i] >= model.C) {
      violation = std::max(0.0, r);
    } else {
      violation = std::abs(r);
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

std::string svm_to_json(const SvmModel& model) {
  nlohmann::json j;
  j["type"] = "svm";
  j["gamma"] = model.gamma;
  j["C"] = model.C;
  j["bias"] = model.bias;
  j["kkt_gap"] = model.kkt_gap;
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  j["dual_coef"] = model.dual_coef;
  j["n_features"] = model.support_vectors.cols;
  j["support_vectors"] = model.support_vectors.data;
  return j.dump();
}

SvmModel svm_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("type") != "svm") throw LoadError("model file is not an SVM");
    SvmModel m;
    m.gamma = j.at("gamma").get<double>();
    m.C = j.at("C").get<double>();
    m.bias = j.at("bias").get<double>();
    m.kkt_gap = j.value("kkt_gap", 0.0);
    m.iterations = j.value("iterations", std::size_t{0});
    m.converged = j.value("converged", false);
    m.dual_coef = j.at("dual_coef").get<std::vector<double>>();
    m.support_vectors.cols = j.at("n_features").get<std::size_t>();
    m.support_vectors.data = j.at("support_vectors").get<std::vector<float>>();
    m.support_vectors.rows = m.dual_coef.size();
    if (m.support_vectors.data.size() != m.support_vectors.rows * m.support_vectors.cols) {
      throw LoadError("support vector array does not match dual coefficients");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed SVM model: ") + e.what());
  }
}

}  // namespace aesthetics::baselines
