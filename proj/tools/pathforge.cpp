#include <iostream>
#include <string>
#include <vector>

#include "pathforge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pathforge::run_cli(args, std::cin, std::cout, std::cerr);
}
