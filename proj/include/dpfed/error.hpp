#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpfed {

/// Base of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration, bad arguments, or a violated precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Two flat vectors (or a vector and a model) disagree on layout.
class LayoutError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A formula was asked to evaluate outside its domain (e.g. log of a
/// non-positive argument).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Not enough samples to satisfy a partition request.
class CapacityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Malformed CSV input. `line()` is 1-based and counts the header.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A label string that is not one of the schema's class names.
class LabelError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Training produced a non-finite parameter.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t round, const std::string& what)
      : Error("diverged at round " + std::to_string(round) + ": " + what),
        round_(round) {}
  std::size_t round() const noexcept { return round_; }

 private:
  std::size_t round_;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpfed
