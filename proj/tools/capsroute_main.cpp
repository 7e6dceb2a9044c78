#include <iostream>

#include "capsroute/cli/commands.hpp"

int main(int argc, char** argv) {
  return capsroute::cli::run_cli(argc, argv, std::cout, std::cerr);
}
