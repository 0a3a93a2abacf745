#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace defilab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Line and column are 1-based; column 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
  }
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed input that violates a structural invariant (totality, arity, name clash...).
class SemanticError : public Error {
 public:
  using Error::Error;
};

/// A resource cap (universe size, subset enumeration, formula size) would be exceeded.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

/// Formula synthesis aborted by the AST size guard.
class SizeGuardExceeded : public CapExceeded {
 public:
  using CapExceeded::CapExceeded;
};

/// An analysis precondition failed (target not a solution, order not linear, ...).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

}  // namespace defilab
