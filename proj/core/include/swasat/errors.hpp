#pragma once

#include <stdexcept>
#include <string>

namespace swasat {

/// Base class of every error the library raises. `code()` is a stable,
/// machine-parseable identifier used by the CLI and the HTTP service.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Tensor shape or latent dimensionality does not match the model.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message) : Error("E_DIMENSION", message) {}
};

/// A configuration value is outside its valid range.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("E_CONFIG", message) {}
};

/// Dataset or manifest content is inconsistent with the request.
class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error("E_DATA", message) {}
};

/// Filesystem or (de)serialization failure.
class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("E_IO", message) {}
};

/// A requested index or name does not exist.
class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& message) : Error("E_NOT_FOUND", message) {}
};

/// A loss or metric became non-finite during optimization.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& message) : Error("E_DIVERGED", message) {}
};

}  // namespace swasat
