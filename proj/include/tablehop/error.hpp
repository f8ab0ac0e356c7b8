#pragma once

#include <stdexcept>
#include <string>

namespace tablehop {

// Coarse failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  usage,    // bad flags or configuration
  data,     // malformed or inconsistent input files, corpus/index mismatches
  backend,  // embedding or generation service failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(ErrorKind::backend, what) {}
};

}  // namespace tablehop
