#pragma once

#include <stdexcept>
#include <string>

namespace sublevel {

enum class ErrorCode {
  InvalidMatrix,
  RankTooLarge,
  NotPositiveDefinite,
  DimensionError,
  InvalidCoarseDim,
  DomainViolation,
  NonFinite,
  CapExceeded,
  Precondition,
  LineSearchFailed,
  SingularHessian,
  SingularReducedHessian,
  DomainError,
  NotApplicable,
  ParseError,
  EmptyDataset,
  IoError,
  ConfigError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error(ErrorCode::ParseError,
              "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace sublevel
