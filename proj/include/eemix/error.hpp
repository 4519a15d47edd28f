#pragma once

#include <stdexcept>
#include <string>

namespace eemix {

// Bad inputs: malformed files, broken invariants, violated preconditions.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failures while computing on otherwise valid inputs (degenerate data,
// no usable pixels, zero noise model). The CLI maps this to exit code 1.
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eemix
