#include <iostream>
#include <string>
#include <vector>

#include "defilab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return defilab::cli::run(args, std::cout, std::cerr);
}
