#include "stlad/error.hpp"

namespace stlad {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Horizon: return "horizon violation";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Numeric: return "numerical failure";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::BlackBoxCrash: return "black-box crashed";
    case ErrorCode::BlackBoxTimeout: return "black-box timed out";
    case ErrorCode::BlackBoxProtocol: return "black-box protocol error";
    case ErrorCode::BlackBoxRemote: return "black-box reported an error";
  }
  return "unknown error";
}

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : Error(ErrorCode::Parse, "line " + std::to_string(line) + ", column " +
                                  std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      detail_(message) {}

HorizonError::HorizonError(std::size_t required_length, std::size_t available_length)
    : Error(ErrorCode::Horizon,
            "formula needs " + std::to_string(required_length) +
                " trace steps but only " + std::to_string(available_length) +
                " are available"),
      required_(required_length),
      available_(available_length) {}

}  // namespace stlad
