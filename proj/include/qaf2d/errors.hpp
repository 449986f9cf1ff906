#pragma once

#include <stdexcept>
#include <string>

namespace qaf2d {

/// Base for every error raised by the library. The CLI maps subclasses to
/// distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function argument violated a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is out of its admissible range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A class id or name is not present in the table being queried.
class UnknownClassError : public Error {
 public:
  explicit UnknownClassError(const std::string& name)
      : Error("unknown class: " + name), name_(name) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Malformed input document. Line and column are 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace qaf2d
