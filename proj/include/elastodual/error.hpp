#pragma once

#include <stdexcept>
#include <string>

namespace elastodual {

/// Invalid input or configuration (CLI exit code 1).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical precondition failed at run time: loss of positive
/// definiteness, non-convergence, infeasible iterate (CLI exit code 2).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace elastodual
