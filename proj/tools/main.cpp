#include "cli.hpp"

#include <iostream>

int main(int argc, char **argv) {
  return smartstat::cli::run_cli(argc, argv, std::cout, std::cerr);
}
