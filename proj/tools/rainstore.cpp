#include <iostream>

#include "rainstore/cli.hpp"

int main(int argc, char** argv) {
  return rainstore::run_cli(argc, argv, std::cout, std::cerr);
}
