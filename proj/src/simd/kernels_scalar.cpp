#include "aesthetics/simd/kernels.hpp"

namespace aesthetics::simd {

namespace {

double dot_scalar(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

void gemm_abt_scalar(const float* a, const float* b, float* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = static_cast<float>(dot_scalar(arow, b + j * k, k));
  }
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const float scaled = alpha * x[i];
    y[i] = y[i] + scaled;
  }
}

void relu_scalar(const float* in, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
}

void relu_backward_scalar(const float* pre, const float* grad_out, float* grad_in, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) grad_in[i] = pre[i] > 0.0f ? grad_out[i] : 0.0f;
}

void momentum_step_scalar(float* w, float* v, const float* g, std::size_t n, float momentum, float step) {
  for (std::size_t i = 0; i < n; ++i) {
    const float decayed = momentum * v[i];
    v[i] = decayed + g[i];
    const float delta = step * v[i];
    w[i] = w[i] - delta;
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar", gemm_abt_scalar, dot_scalar, axpy_scalar, relu_scalar, relu_backward_scalar, momentum_step_scalar,
  };
  return table;
}

}  // namespace aesthetics::simd
