// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "denseworld/pipeline/cli.hpp"

int main(int argc, char** argv) {
  return denseworld::pipeline::cli_run({argv, argv + argc}, std::cout, std::cerr);
}
