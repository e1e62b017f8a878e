// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx512f (see CMakeLists.txt); only reached after a CPUID check.
#include "leafseg/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace leafseg::simd::detail {
namespace {

void min_plus_row_avx512(double* dst, const double* src, double bias, std::size_t n) {
  const __m512d b = _mm512_set1_pd(bias);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m512d c = _mm512_add_pd(b, _mm512_loadu_pd(src + j));
    _mm512_storeu_pd(dst + j, _mm512_min_pd(c, _mm512_loadu_pd(dst + j)));
  }
  if (j < n) {
    const __mmask8 m = static_cast<__mmask8>((1u << (n - j)) - 1u);
    const __m512d c = _mm512_add_pd(b, _mm512_maskz_loadu_pd(m, src + j));
    _mm512_mask_storeu_pd(dst + j, m, _mm512_min_pd(c, _mm512_maskz_loadu_pd(m, dst + j)));
  }
}

double dot_avx512(const double* a, const double* b, std::size_t n) {
  __m512d acc = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm512_add_pd(acc, _mm512_mul_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i)));
  }
  if (i < n) {
    const __mmask8 m = static_cast<__mmask8>((1u << (n - i)) - 1u);
    acc = _mm512_add_pd(acc, _mm512_mul_pd(_mm512_maskz_loadu_pd(m, a + i), _mm512_maskz_loadu_pd(m, b + i)));
  }
  return _mm512_reduce_add_pd(acc);
}

void axpy_avx512(double alpha, const double* x, double* y, std::size_t n) {
  const __m512d al = _mm512_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm512_storeu_pd(y + i, _mm512_add_pd(_mm512_loadu_pd(y + i), _mm512_mul_pd(al, _mm512_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

const KernelTable kAvx512Table{Isa::avx512, min_plus_row_avx512, dot_avx512, axpy_avx512};

}  // namespace

const KernelTable* avx512_table() { return &kAvx512Table; }

}  // namespace leafseg::simd::detail

#else

namespace leafseg::simd::detail {
const KernelTable* avx512_table() { return nullptr; }
}  // namespace leafseg::simd::detail

#endif
