// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <iostream>

#include "sonotex/cli.hpp"

int main(int argc, char** argv) { return sonotex::run_cli(argc, argv, std::cout, std::cerr); }
