#pragma once

#include <stdexcept>
#include <string>

namespace gagnet {

/// Bad flags, malformed config, invalid hyperparameters. CLI exit code 1.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/// Unreadable or malformed data files, impossible mixing requests. CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values where finite ones are required (NaN loss). CLI exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gagnet
