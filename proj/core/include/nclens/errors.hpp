#pragma once

#include <stdexcept>
#include <string>

namespace nclens {

/// Raised when a caller violates a documented precondition (shape mismatch,
/// out-of-range parameter, malformed input file).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a computation produces non-finite values where finite ones are required.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nclens
