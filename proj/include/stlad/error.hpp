#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stlad {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Horizon,
  Io,
  Numeric,
  Config,
  BlackBoxCrash,
  BlackBoxTimeout,
  BlackBoxProtocol,
  BlackBoxRemote,
};

const char* to_string(ErrorCode code);

/// Base of every exception thrown by the library. The code maps one-to-one
/// onto the C API status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Syntax or range error in formula text. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string detail_;
};

/// Raised when a formula needs more of the trace than exists.
class HorizonError : public Error {
 public:
  HorizonError(std::size_t required_length, std::size_t available_length);

  std::size_t required_length() const noexcept { return required_; }
  std::size_t available_length() const noexcept { return available_; }

 private:
  std::size_t required_;
  std::size_t available_;
};

}  // namespace stlad
