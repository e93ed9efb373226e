// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace aspectforge {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity surfaced where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (corpus, checkpoint, config).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A stored hash does not match the data it guards.
class HashMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace aspectforge
