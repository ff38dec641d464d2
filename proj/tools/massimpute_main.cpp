#include <iostream>

#include "massimpute/cli.hpp"

int main(int argc, char** argv) {
  return massimpute::cli::run_cli(argc, argv, std::cout, std::cerr);
}
