#pragma once

#include <stdexcept>
#include <string>

namespace gsu {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data or a violated precondition. The CLI maps it to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical engine failed (eigensolver, every tail-probability engine, root
/// bracketing). The CLI maps it to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsu
