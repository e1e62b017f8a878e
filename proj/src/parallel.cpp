// SPDX-License-Identifier: Apache-2.0
#include "leafseg/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace leafseg {
namespace {

int initial_limit() {
  if (const char* env = std::getenv("LEAFSEG_THREADS"); env != nullptr) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;
}

std::atomic<int> g_limit{initial_limit()};

}  // namespace

int thread_limit() { return g_limit.load(); }

void set_thread_limit(int threads) { g_limit.store(threads > 0 ? threads : 0); }

int resolve_threads(int requested) {
  int n = requested > 0 ? requested : thread_limit();
#ifdef _OPENMP
  if (n <= 0) n = omp_get_max_threads();
#else
  n = 1;
#endif
  return n > 0 ? n : 1;
}

}  // namespace leafseg
