#pragma once

#include <stdexcept>
#include <string>

namespace edgecache {

// Argument outside the mathematical domain of an operation (alpha >= 1,
// wrong popcount, out-of-range action index, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Vector lengths that should agree do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or out-of-range configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A learning update produced a NaN or infinity. Maps to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace edgecache
