#include <iostream>
#include <string>
#include <vector>

#include "fdm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return fdm::cli::run(args, std::cout, std::cerr);
}
