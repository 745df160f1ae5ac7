#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phenocast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input that parses but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to produce a usable result.
class ComputationError : public Error {
 public:
  using Error::Error;
};

}  // namespace phenocast
