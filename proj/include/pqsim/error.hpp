#pragma once

#include <stdexcept>
#include <string>

namespace pqsim {

/// Thrown when a caller violates an operation's precondition or a type
/// invariant (bad dimensions, non-normalized input, out-of-range parameter).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pqsim
