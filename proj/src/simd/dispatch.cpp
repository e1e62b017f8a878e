// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string>

#include "leafseg/error.hpp"
#include "leafseg/simd/kernels.hpp"

namespace leafseg::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::avx512: return "avx512";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa isa_from_name(std::string_view name) {
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512, Isa::neon}) {
    if (isa_name(isa) == name) return isa;
  }
  throw InputError("unknown SIMD variant '" + std::string(name) + "'");
}

namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
    case Isa::avx2: return __builtin_cpu_supports("avx2");
    case Isa::avx512: return __builtin_cpu_supports("avx512f");
#else
    case Isa::avx2: return false;
    case Isa::avx512: return false;
#endif
#if defined(__aarch64__)
    case Isa::neon: return true;
#else
    case Isa::neon: return false;
#endif
  }
  return false;
}

const KernelTable* compiled_table(Isa isa) {
  switch (isa) {
    case Isa::scalar: return &detail::kScalarTable;
    case Isa::avx2: return detail::avx2_table();
    case Isa::avx512: return detail::avx512_table();
    case Isa::neon: return detail::neon_table();
  }
  return nullptr;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("LEAFSEG_SIMD"); env != nullptr && *env != '\0') {
    if (const KernelTable* t = kernels_for(isa_from_name(env))) return t;
    throw InputError(std::string("LEAFSEG_SIMD=") + env + " is not available on this machine");
  }
  for (Isa isa : {Isa::avx512, Isa::avx2, Isa::neon}) {
    if (const KernelTable* t = kernels_for(isa)) return t;
  }
  return &detail::kScalarTable;
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

const KernelTable* kernels_for(Isa isa) {
  const KernelTable* t = compiled_table(isa);
  return t != nullptr && cpu_supports(isa) ? t : nullptr;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512, Isa::neon}) {
    if (kernels_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

const KernelTable& kernels() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = pick_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void force_isa(Isa isa) {
  const KernelTable* t = kernels_for(isa);
  if (t == nullptr) throw InputError("SIMD variant '" + std::string(isa_name(isa)) + "' is not available");
  g_active.store(t, std::memory_order_release);
}

}  // namespace leafseg::simd
