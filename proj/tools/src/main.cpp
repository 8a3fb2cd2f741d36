#include <iostream>

#include "espresso/cli/commands.hpp"

int main(int argc, char** argv) {
  return espresso::cli::run_cli(argc, argv, std::cout, std::cerr);
}
