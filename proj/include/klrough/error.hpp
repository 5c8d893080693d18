#pragma once

#include <stdexcept>
#include <string>

namespace klrough {

// Bad arguments to an operation: shape mismatch, index order, out-of-range parameter.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical or data problem: non-PSD covariance, factorization failure, malformed file.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Experiment configuration rejected during validation.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const char* msg) {
    if (!cond) throw InputError(msg);
}

}  // namespace detail

}  // namespace klrough
