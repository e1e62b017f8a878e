// SPDX-License-Identifier: Apache-2.0
#include "leafseg/cli.hpp"

int main(int argc, char** argv) { return leafseg::cli::run(argc, argv); }
