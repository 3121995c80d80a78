#include <iostream>
#include <string>
#include <vector>

#include "selfcal/cli.hpp"

int main(int argc, char **argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return selfcal::run_cli(args, std::cout, std::cerr);
}
