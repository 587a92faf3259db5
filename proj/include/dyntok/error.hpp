#pragma once

#include <stdexcept>
#include <string>

namespace dyntok {

/// Data or validation failure: malformed files, broken invariants, bad inputs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller misuse that the CLI reports with exit code 1 (bad flags, missing config).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace dyntok
