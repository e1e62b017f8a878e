// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace leafseg::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kRuntimeError = 2;

/// Entry point of the `leafseg` binary. Diagnostics go to stderr, data to
/// files or stdout.
int run(int argc, char** argv);

}  // namespace leafseg::cli
