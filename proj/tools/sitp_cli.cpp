#include <iostream>
#include <string>
#include <vector>

#include "sitp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sitp::run_cli(args, std::cout, std::cerr);
}
