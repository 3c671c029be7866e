#include <iostream>

#include "aesthetics/cli.hpp"

int main(int argc, char** argv) {
  return aesthetics::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
