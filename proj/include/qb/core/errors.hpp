#pragma once

#include <stdexcept>
#include <string>

namespace qb {

/// Bad parameters, malformed files, unknown config keys. Maps to CLI exit code 1.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Contract terms for which a quantity is only defined as a limit (T = 0, sigma = 0).
class DegenerateContract : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Non-convergence, ill-conditioning, overflow. Maps to CLI exit code 2.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInput(what);
}

}  // namespace qb
