#pragma once

#include <stdexcept>
#include <string>

namespace aml {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or violated invariant on a domain type.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Euler-then-normalize step landed too close to the origin.
class StepTooLargeError : public Error {
 public:
  using Error::Error;
};

// Kernel exponent beyond the double-precision guard (beta * cos > 700).
class OverflowError : public Error {
 public:
  using Error::Error;
};

class CoincidentAtomsError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ScaleMismatchError : public Error {
 public:
  using Error::Error;
};

// A check whose hypotheses do not hold for the given input.
class InapplicableError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace aml
