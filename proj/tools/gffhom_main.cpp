#include <iostream>
#include <string>
#include <vector>

#include "gffhom/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gffhom::cli_main(args, std::cout, std::cerr);
}
