#include <string>
#include <vector>

#include "prefmod/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return prefmod::cli::run_cli(args);
}
