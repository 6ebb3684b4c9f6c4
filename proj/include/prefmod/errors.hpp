#pragma once

#include <stdexcept>
#include <string>

namespace prefmod {

// Error taxonomy mirrored by the CLI exit codes: config 2, data 3, numerical 4.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace prefmod
