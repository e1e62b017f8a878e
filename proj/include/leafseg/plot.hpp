// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "leafseg/eval.hpp"

namespace leafseg {

/// Renders mean mAP vs noise magnitude: one panel per noise kind, one line
/// per method. Output is a self-contained SVG and byte-stable for a given
/// table. Throws InputError on an empty table or non-finite values.
std::string render_sweep_svg(const std::vector<SweepRow>& rows);

void emit_plot(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace leafseg
