#pragma once

#include <stdexcept>
#include <string>

namespace tpc {

// Exit-code mapping used by the CLI: config=1, data=2, numerical=3.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : DataError {
    explicit DimensionError(const std::string& msg) : DataError(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularFactorizationError : NumericalError {
    int row_index;
    SingularFactorizationError(const std::string& msg, int row)
        : NumericalError(msg), row_index(row) {}
};

}  // namespace tpc
