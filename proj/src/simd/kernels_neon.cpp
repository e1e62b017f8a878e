// SPDX-License-Identifier: Apache-2.0
#include "leafseg/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace leafseg::simd::detail {
namespace {

void min_plus_row_neon(double* dst, const double* src, double bias, std::size_t n) {
  const float64x2_t b = vdupq_n_f64(bias);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t c = vaddq_f64(b, vld1q_f64(src + j));
    const float64x2_t d = vld1q_f64(dst + j);
    // Select instead of vminq_f64 so NaN handling matches the scalar form.
    vst1q_f64(dst + j, vbslq_f64(vcltq_f64(c, d), c, d));
  }
  for (; j < n; ++j) {
    const double cand = bias + src[j];
    dst[j] = cand < dst[j] ? cand : dst[j];
  }
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t al = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(al, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

const KernelTable kNeonTable{Isa::neon, min_plus_row_neon, dot_neon, axpy_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeonTable; }

}  // namespace leafseg::simd::detail

#else

namespace leafseg::simd::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace leafseg::simd::detail

#endif
