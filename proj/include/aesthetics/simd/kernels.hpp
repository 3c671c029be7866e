#pragma once

#include <cstddef>
#include <string_view>

// Inner loops of the network, in two flavours: a portable scalar reference and
// an AVX2/FMA variant picked at runtime when the CPU supports it. Every
// variant accumulates reductions in double and stores float.
//
// Equivalence contract between variants (checked by tests/unit/test_kernels):
//   - relu, relu_backward, axpy, momentum_step: bit-identical.
//   - dot, gemm_abt: summation order differs, results agree to within one
//     float rounding of the double-precision sum.
//
// Set AESTHETICS_KERNELS=scalar in the environment to force the reference
// path.

namespace aesthetics::simd {

struct KernelTable {
  std::string_view name;

  // c[i*n + j] = sum_k a[i*k + k'] * b[j*k + k'] for row-major a (m x k) and
  // b (n x k); c is overwritten.
  void (*gemm_abt)(const float* a, const float* b, float* c, std::size_t m, std::size_t n, std::size_t k);

  double (*dot)(const float* a, const float* b, std::size_t n);

  // y += alpha * x, multiply then add (no fused rounding).
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);

  void (*relu)(const float* in, float* out, std::size_t n);

  // grad_in = pre_activation > 0 ? grad_out : 0
  void (*relu_backward)(const float* pre_activation, const float* grad_out, float* grad_in, std::size_t n);

  // velocity = momentum * velocity + grad; weight = weight - step * velocity.
  // Each product is rounded before the add so the update is reproducible
  // across variants.
  void (*momentum_step)(float* weight, float* velocity, const float* grad, std::size_t n, float momentum,
                        float step);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

// The table used by the network; resolved once per process.
const KernelTable& active_kernels();

}  // namespace aesthetics::simd
