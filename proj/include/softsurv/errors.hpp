#pragma once

#include <stdexcept>
#include <string>

namespace softsurv {

/// Raised when a numerical routine cannot continue (non-finite log density,
/// degenerate acceptance, failed factorization).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid fit / simulation configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace softsurv
