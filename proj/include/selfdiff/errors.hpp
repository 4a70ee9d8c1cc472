#pragma once

#include <stdexcept>
#include <string>

namespace selfdiff {

// Configuration / precondition violations. The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Runtime numerical failures (explosion guard, energy-increase abort).
// The CLI maps these to exit code 3.
class NumericalAbort : public std::runtime_error {
 public:
  explicit NumericalAbort(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace selfdiff
