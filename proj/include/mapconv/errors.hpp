#pragma once

#include <stdexcept>
#include <string>

namespace mapconv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or size mismatch between tensors, maps and parameters.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Out-of-range or inconsistent generator / command parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Non-finite sampling coordinate or tensor value.
class InvalidCoordinate : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace mapconv
