#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace maxfun {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or configuration was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A solver could not satisfy its constraints.
class Infeasible : public Error {
 public:
  explicit Infeasible(const std::string& what, std::size_t layer = 0)
      : Error(what), layer_(layer) {}

  /// 1-based layer index, 0 when not raised from a layered solve.
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

}  // namespace maxfun
