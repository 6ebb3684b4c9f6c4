#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace prefmod::cli {

// Runs one command line (without the program name) and returns the process
// exit code: 0 success, 2 config error, 3 data error, 4 numerical failure,
// 1 unexpected. Failures print a single "error N: message" line to err.
// The PREFMOD_SEED environment variable overrides --seed, which overrides
// the config file seed.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace prefmod::cli
