// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace leafseg::simd {

enum class Isa { scalar, avx2, avx512, neon };

std::string_view isa_name(Isa isa);
Isa isa_from_name(std::string_view name);

/// Inner loops that dominate the dense kernels. Every variant of
/// min_plus_row must produce bitwise-identical output to the scalar one
/// (one add and one min per element, no FMA, no reassociation).
struct KernelTable {
  Isa isa;

  /// dst[j] = min(dst[j], bias + src[j]) for j in [0, n).
  /// dst and src may be the same row, but must not otherwise overlap.
  void (*min_plus_row)(double* dst, const double* src, double bias, std::size_t n);

  /// Sum of a[i] * b[i]. Vector variants reassociate the sum, so results
  /// agree with scalar only up to rounding.
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// y[i] += alpha * x[i].
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

/// Variants compiled into this binary and supported by the running CPU.
std::vector<Isa> available_isas();

/// Table for a specific variant; nullptr when unavailable.
const KernelTable* kernels_for(Isa isa);

/// Active table: the widest available variant, unless LEAFSEG_SIMD names
/// another one or force_isa() was called.
const KernelTable& kernels();

/// Overrides the active variant. Throws InputError if unavailable.
void force_isa(Isa isa);

namespace detail {
extern const KernelTable kScalarTable;
const KernelTable* avx2_table();    // nullptr when not compiled in
const KernelTable* avx512_table();
const KernelTable* neon_table();
}  // namespace detail

}  // namespace leafseg::simd
