#include <iostream>

#include "percept/cli.hpp"

int main(int argc, char** argv)
{
  return percept::run_cli(argc, argv, std::cout, std::cerr);
}
