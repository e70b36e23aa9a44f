#pragma once

#include <stdexcept>
#include <string>

namespace treecnn {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/layer shape mismatch. `layer()` names the offending layer ("input"
// when the batch itself does not match the network input).
class ShapeError : public Error {
 public:
  ShapeError(std::string layer, const std::string& detail)
      : Error("layer '" + layer + "': " + detail), layer_(std::move(layer)) {}

  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string layer_;
};

// Malformed or truncated file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value; `field()` is the dotted path of the field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& detail)
      : Error(field + ": " + detail), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Structural violation of the classifier tree.
class TreeError : public Error {
 public:
  using Error::Error;
};

}  // namespace treecnn
