#pragma once

#include <stdexcept>
#include <string>

namespace necoc {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidArity : public Error {
 public:
  using Error::Error;
};

class RowCollision : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

class InvalidStrategy : public Error {
 public:
  using Error::Error;
};

class BadMagic : public Error {
 public:
  using Error::Error;
};

class CountMismatch : public Error {
 public:
  using Error::Error;
};

class TruncatedFile : public Error {
 public:
  using Error::Error;
};

class MissingColumn : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace necoc
