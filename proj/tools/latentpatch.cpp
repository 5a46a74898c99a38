#include <iostream>

#include "latentpatch/cli.hpp"

int main(int argc, char** argv) {
  return latentpatch::run_cli(argc, argv, std::cout, std::cerr);
}
