#pragma once

#include <stdexcept>
#include <string>

namespace gaa {

// Bad or inconsistent input: malformed files, shape mismatches, invalid
// configuration. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Divergence, non-convergence or non-finite values. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gaa
