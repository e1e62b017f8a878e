// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace leafseg {

/// Upper bound on worker threads used by every parallel kernel.
/// 0 means "use the runtime default". Initialized from LEAFSEG_THREADS.
int thread_limit();
void set_thread_limit(int threads);

/// Number of threads a kernel should request given an explicit override
/// (0 = fall back to thread_limit()).
int resolve_threads(int requested);

}  // namespace leafseg
