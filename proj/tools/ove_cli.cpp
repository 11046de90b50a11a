#include "ove/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  return ove::cli::run_cli(argc, argv, std::cout, std::cerr);
}
