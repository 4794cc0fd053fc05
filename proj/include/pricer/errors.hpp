#pragma once

#include <stdexcept>
#include <string>

namespace pricer {

// Raised when an iterative routine fails to converge or a quantity leaves
// its representable range.  Input validation problems use std::invalid_argument.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pricer
