#pragma once

#include <stdexcept>
#include <string>

namespace pbmrf {

// Raised when a dense table or intermediate structure would exceed the
// configured size cap. The CLI maps this to exit code 3.
class ResourceLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an input violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pbmrf
