#include <iostream>
#include <string>
#include <vector>

#include "jarcast/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return jarcast::run_cli(args, std::cout, std::cerr);
}
