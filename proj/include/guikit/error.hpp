#pragma once

#include <stdexcept>
#include <string>

namespace guikit {

// Base for every error the toolkit raises. Callers that only need a message
// can catch this; the subclasses carry structured context.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record (missing field, wrong JSON type, bad enum value).
class SchemaError : public Error {
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

class OutOfBoundsError : public Error {
 public:
  OutOfBoundsError(char axis, int value, int limit)
      : Error(std::string("point out of bounds on ") + axis + " axis: " + std::to_string(value) +
              " not in [0, " + std::to_string(limit) + "]"),
        axis_(axis) {}
  char axis() const noexcept { return axis_; }

 private:
  char axis_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace guikit
