#include <iostream>

#include "zec/cli.hpp"

int main(int argc, char** argv) {
  return zec::run_cli(argc, argv, std::cout, std::cerr);
}
