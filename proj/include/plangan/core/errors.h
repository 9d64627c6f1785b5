#pragma once

#include <stdexcept>
#include <string>

namespace plangan {

// Error categories surfaced by every module. The CLI maps each one to a
// distinct exit code (see tools/plangan_main.cc).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, shape mismatch, or contract violation by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered, or a degenerate numeric input (e.g. zero matrix).
class NumericError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Corrupt or incompatible checkpoint. `tensor()` names the offending entry.
class LoadError : public IoError {
 public:
  LoadError(const std::string& tensor, const std::string& what)
      : IoError("checkpoint tensor '" + tensor + "': " + what), tensor_(tensor) {}
  const std::string& tensor() const { return tensor_; }

 private:
  std::string tensor_;
};

// Requested data does not exist yet (e.g. sampling from an empty buffer).
class UnavailableError : public Error {
 public:
  using Error::Error;
};

}  // namespace plangan
