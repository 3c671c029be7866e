#include "aesthetics/simd/kernels.hpp"

#if defined(AESTHETICS_HAVE_AVX2) && (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))

#include <immintrin.h>

#define AESTHETICS_AVX2 __attribute__((target("avx2,fma")))

namespace aesthetics::simd {

namespace {

AESTHETICS_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  const __m128d high64 = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
}

// Widens 8 floats into two 4-lane doubles. Products of two widened floats are
// exact in double, so the FMAs below only round at the accumulate.
AESTHETICS_AVX2 inline void widen(const float* p, __m256d& lo, __m256d& hi) {
  const __m256 v = _mm256_loadu_ps(p);
  lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
  hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
}

AESTHETICS_AVX2 double dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d alo, ahi, blo, bhi;
    widen(a + i, alo, ahi);
    widen(b + i, blo, bhi);
    acc0 = _mm256_fmadd_pd(alo, blo, acc0);
    acc1 = _mm256_fmadd_pd(ahi, bhi, acc1);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return sum;
}

AESTHETICS_AVX2 void gemm_abt_avx2(const float* a, const float* b, float* c, std::size_t m, std::size_t n,
                                   std::size_t k) {
  const std::size_t k8 = k & ~std::size_t{7};
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const float* b0 = b + (j + 0) * k;
      const float* b1 = b + (j + 1) * k;
      const float* b2 = b + (j + 2) * k;
      const float* b3 = b + (j + 3) * k;
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd(), s2 = _mm256_setzero_pd(),
              s3 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k8; p += 8) {
        __m256d alo, ahi, lo, hi;
        widen(arow + p, alo, ahi);
        widen(b0 + p, lo, hi);
        s0 = _mm256_fmadd_pd(alo, lo, s0);
        s0 = _mm256_fmadd_pd(ahi, hi, s0);
        widen(b1 + p, lo, hi);
        s1 = _mm256_fmadd_pd(alo, lo, s1);
        s1 = _mm256_fmadd_pd(ahi, hi, s1);
        widen(b2 + p, lo, hi);
        s2 = _mm256_fmadd_pd(alo, lo, s2);
        s2 = _mm256_fmadd_pd(ahi, hi, s2);
        widen(b3 + p, lo, hi);
        s3 = _mm256_fmadd_pd(alo, lo, s3);
        s3 = _mm256_fmadd_pd(ahi, hi, s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (std::size_t p = k8; p < k; ++p) {
        const double av = arow[p];
        r0 += av * static_cast<double>(b0[p]);
        r1 += av * static_cast<double>(b1[p]);
        r2 += av * static_cast<double>(b2[p]);
        r3 += av * static_cast<double>(b3[p]);
      }
      c[i * n + j + 0] = static_cast<float>(r0);
      c[i * n + j + 1] = static_cast<float>(r1);
      c[i * n + j + 2] = static_cast<float>(r2);
      c[i * n + j + 3] = static_cast<float>(r3);
    }
    for (; j < n; ++j) c[i * n + j] = static_cast<float>(dot_avx2(arow, b + j * k, k));
  }
}

AESTHETICS_AVX2 void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 scaled = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), scaled));
  }
  for (; i < n; ++i) {
    const float scaled = alpha * x[i];
    y[i] = y[i] + scaled;
  }
}

AESTHETICS_AVX2 void relu_avx2(const float* in, float* out, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(in + i);
    _mm256_storeu_ps(out + i, _mm256_and_ps(_mm256_cmp_ps(v, zero, _CMP_GT_OQ), v));
  }
  for (; i < n; ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
}

AESTHETICS_AVX2 void relu_backward_avx2(const float* pre, const float* grad_out, float* grad_in, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(pre + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(grad_in + i, _mm256_and_ps(mask, _mm256_loadu_ps(grad_out + i)));
  }
  for (; i < n; ++i) grad_in[i] = pre[i] > 0.0f ? grad_out[i] : 0.0f;
}

AESTHETICS_AVX2 void momentum_step_avx2(float* w, float* v, const float* g, std::size_t n, float momentum,
                                        float step) {
  const __m256 vm = _mm256_set1_ps(momentum);
  const __m256 vs = _mm256_set1_ps(step);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 decayed = _mm256_mul_ps(vm, _mm256_loadu_ps(v + i));
    const __m256 vel = _mm256_add_ps(decayed, _mm256_loadu_ps(g + i));
    _mm256_storeu_ps(v + i, vel);
    const __m256 delta = _mm256_mul_ps(vs, vel);
    _mm256_storeu_ps(w + i, _mm256_sub_ps(_mm256_loadu_ps(w + i), delta));
  }
  for (; i < n; ++i) {
    const float decayed = momentum * v[i];
    v[i] = decayed + g[i];
    const float delta = step * v[i];
    w[i] = w[i] - delta;
  }
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  static const KernelTable table{
      "avx2", gemm_abt_avx2, dot_avx2, axpy_avx2, relu_avx2, relu_backward_avx2, momentum_step_avx2,
  };
  return supported ? &table : nullptr;
}

}  // namespace aesthetics::simd

#else

namespace aesthetics::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace aesthetics::simd

#endif
