#pragma once

#include <stdexcept>
#include <string>

namespace pairview {

// Bad arguments or configuration. CLI maps this to exit code 2.
class ArgumentError : public std::runtime_error {
 public:
  explicit ArgumentError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (parse errors, misaligned samples,
// degenerate columns). CLI maps this to exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: non-finite values, rank deficiency, solver faults.
// CLI maps this to exit code 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pairview
