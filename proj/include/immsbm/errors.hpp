#pragma once

#include <stdexcept>
#include <string>

namespace immsbm {

// Malformed or inconsistent input data (files, vocab mismatches, bad ids).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (non-finite likelihood, invalid parameters).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace immsbm
