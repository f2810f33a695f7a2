#pragma once

#include <stdexcept>
#include <string>

namespace aesust {

/// Tensor shapes that violate an operation's contract.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed archive, image or config bytes.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Archive or config content that parses but does not fit the model.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// User-supplied control parameters outside their allowed domain.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aesust
