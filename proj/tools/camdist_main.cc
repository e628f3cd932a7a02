#include <iostream>
#include <string>
#include <vector>

#include "camdist/cli.h"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return camdist::RunCli(args, std::cout, std::cerr);
}
