#pragma once

#include <stdexcept>
#include <string>

namespace gfairhint {

// Error taxonomy mirrored by the C API status codes and the CLI exit codes:
// Usage -> 1, Data -> 2, Numeric -> 3.
enum class ErrorKind { Usage = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Shape or dimension-chain mismatch between tensors or layers.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(ErrorKind::Usage, msg) {}
};

// Invalid configuration value or inconsistent option combination.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(ErrorKind::Usage, msg) {}
};

// API contract violation (wrong call sequence, empty required input, ...).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error(ErrorKind::Usage, msg) {}
};

// Malformed or inconsistent input files.
class IngestError : public Error {
 public:
  explicit IngestError(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

// Rejection sampling gave up (e.g. negative edges on a near-complete graph).
class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

// NaN/Inf reached a tensor, a gradient, or a loss.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(ErrorKind::Numeric, msg) {}
};

}  // namespace gfairhint
