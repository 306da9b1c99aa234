#include "eqshbc/cli.hpp"

#include <iostream>

int main(int argc, char **argv) {
  return eqshbc::run_cli(argc, argv, std::cout, std::cerr);
}
