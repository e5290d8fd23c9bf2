#pragma once

#include <stdexcept>
#include <string>

namespace flexmkt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a documented precondition (dimension mismatch, bad index, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Graph structure is unusable: disconnected, self-loop, unknown bus.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Singular factorization or iteration breakdown inside a numerical kernel.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. `path()` locates the offending element.
class ParseError : public Error {
 public:
  ParseError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Well-formed data that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A case recipe cannot be realized.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Model assembly failed (e.g. a rank-deficient balance matrix).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A market layer that must be solvable was not.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace flexmkt
