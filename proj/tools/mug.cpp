#include <iostream>
#include <string>
#include <vector>

#include "mug/cli/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mug::cli::run(args, std::cout, std::cerr);
}
