#include "lambdapump/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return lambdapump::run_cli(argc, argv, std::cout, std::cerr);
}
