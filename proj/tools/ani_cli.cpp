// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "ani/cli.hpp"

int main(int argc, char** argv) { return ani::cli::run(argc, argv, std::cout, std::cerr); }
