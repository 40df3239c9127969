#include <iostream>
#include <string>
#include <vector>

#include "latentprobe/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return latentprobe::cli::run(args, std::cout, std::cerr);
}
