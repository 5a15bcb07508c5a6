#pragma once

#include <stdexcept>
#include <string>

namespace dmpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid physical/algorithm parameters or non-finite model inputs.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Coincident predicted points make the collision linearization undefined.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// Rejected QP data (non-PSD cost, inconsistent dimensions).
class QpError : public Error {
 public:
  using Error::Error;
};

/// Scenario file violates the schema. `where` is a JSON pointer or
/// "line:column" anchor into the offending document.
class SchemaError : public Error {
 public:
  SchemaError(std::string where, const std::string& what)
      : Error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

/// Random scenario generation could not satisfy the separation margins.
class GenerationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dmpc
