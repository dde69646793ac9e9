#pragma once

#include <stdexcept>
#include <string>

namespace kmt {

// A law fails one of the hypotheses an operation requires.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The request has no solution: an infeasible partial sum, a degenerate
// variance, a split that cannot be realized.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configured size guard (DP support, enumeration, big-integer width) tripped.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kmt
