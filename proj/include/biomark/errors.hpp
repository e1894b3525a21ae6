#pragma once

#include <stdexcept>
#include <string>

namespace biomark {

// Error categories map 1:1 onto CLI exit codes and C API status values:
// config = 2, data = 3, numeric = 4.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace biomark
