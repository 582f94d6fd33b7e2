#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace peb {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arguments outside the domain of an operation (point off the circle, empty
// batch, shape mismatch, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed computation graph: dangling node references, kind mismatches.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A head-mode dependent operation called in the wrong mode.
class ModeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered during evaluation or training.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t where = -1)
      : Error(what), where_(where) {}

  // Node index, iteration or grid index that first went non-finite (-1 if n/a).
  std::ptrdiff_t where() const noexcept { return where_; }

 private:
  std::ptrdiff_t where_;
};

class DegenerateReferenceError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Configuration or input file problems; the CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace peb
