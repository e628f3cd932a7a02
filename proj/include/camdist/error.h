#pragma once

#include <stdexcept>
#include <string>

namespace camdist {

// Base class for every error raised by the library. The CLI maps these onto
// exit codes, so subclasses carry the failure category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition on an argument (domain errors, bad configs).
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

// Not enough usable data for an estimate: too few jointly valid pixels,
// rank-deficient design, empty evaluation set.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Frames fed to a stateful consumer in the wrong order.
class OrderError : public Error {
 public:
  using Error::Error;
};

}  // namespace camdist
