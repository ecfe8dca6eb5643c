#include <iostream>
#include <string>
#include <vector>

#include "lacon/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lacon::run_cli(args, std::cout, std::cerr);
}
