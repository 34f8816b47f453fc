#pragma once

#include <stdexcept>
#include <string>

namespace gridlag {

/// Raised when input data cannot be processed (bad files, degenerate inputs).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for invalid configuration values or missing mandatory settings.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace gridlag
