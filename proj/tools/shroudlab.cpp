// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "shroudlab/commands.hpp"

int main(int argc, char** argv) { return shroudlab::cli::run(argc, argv, std::cout, std::cerr); }
