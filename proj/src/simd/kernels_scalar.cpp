// SPDX-License-Identifier: Apache-2.0
#include "leafseg/simd/kernels.hpp"

namespace leafseg::simd::detail {
namespace {

void min_plus_row_scalar(double* dst, const double* src, double bias, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double cand = bias + src[j];
    dst[j] = cand < dst[j] ? cand : dst[j];
  }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable kScalarTable{Isa::scalar, min_plus_row_scalar, dot_scalar, axpy_scalar};

}  // namespace leafseg::simd::detail
