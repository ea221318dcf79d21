#include <iostream>

#include "pbmrf/cli.hpp"

int main(int argc, char** argv) {
  return pbmrf::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
