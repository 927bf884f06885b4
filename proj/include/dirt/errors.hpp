#pragma once

#include <stdexcept>
#include <string>

namespace dirt {

/// Invalid argument or point outside a declared domain.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Malformed configuration (CLI maps this to exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure while constructing an approximation (exit code 3).
class BuildError : public std::runtime_error {
public:
    explicit BuildError(const std::string& msg, int layer = -1)
        : std::runtime_error(msg), layer_index(layer) {}
    int layer_index;
};

/// File I/O or format failure (exit code 4).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dirt
