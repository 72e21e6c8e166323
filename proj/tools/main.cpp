#include <iostream>
#include <string>
#include <vector>

#include "bellshrink/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return bellshrink::run_cli(args, std::cout, std::cerr);
}
