#include <iostream>
#include <string>
#include <vector>

#include "qexp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qexp::cli::run(args, std::cout, std::cerr);
}
