// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 (see CMakeLists.txt); only reached after a CPUID check.
#include "leafseg/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace leafseg::simd::detail {
namespace {

void min_plus_row_avx2(double* dst, const double* src, double bias, std::size_t n) {
  const __m256d b = _mm256_set1_pd(bias);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m256d c0 = _mm256_add_pd(b, _mm256_loadu_pd(src + j));
    const __m256d c1 = _mm256_add_pd(b, _mm256_loadu_pd(src + j + 4));
    // min_pd(a, b) returns b when a < b is false, matching the scalar select.
    _mm256_storeu_pd(dst + j, _mm256_min_pd(c0, _mm256_loadu_pd(dst + j)));
    _mm256_storeu_pd(dst + j + 4, _mm256_min_pd(c1, _mm256_loadu_pd(dst + j + 4)));
  }
  for (; j + 4 <= n; j += 4) {
    const __m256d c = _mm256_add_pd(b, _mm256_loadu_pd(src + j));
    _mm256_storeu_pd(dst + j, _mm256_min_pd(c, _mm256_loadu_pd(dst + j)));
  }
  for (; j < n; ++j) {
    const double cand = bias + src[j];
    dst[j] = cand < dst[j] ? cand : dst[j];
  }
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d al = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(al, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

const KernelTable kAvx2Table{Isa::avx2, min_plus_row_avx2, dot_avx2, axpy_avx2};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2Table; }

}  // namespace leafseg::simd::detail

#else

namespace leafseg::simd::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace leafseg::simd::detail

#endif
