// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include <iostream>
#include <string>
#include <vector>

#include "spt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return spt::cli_main(args, std::cout, std::cerr);
}
