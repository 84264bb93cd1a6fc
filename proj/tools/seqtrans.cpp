#include <iostream>

#include "seqtrans/commands.hpp"

int main(int argc, char** argv) {
  return seqtrans::run_cli(argc, argv, std::cout, std::cerr);
}
