// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace earthforge {

enum class ErrorKind {
  InvalidArgument,
  AllPixelsInvalid,
  IndexOutOfRange,
  InvalidRange,
  DimensionMismatch,
  InvalidTarget,
  NonDivisible,
  ShapeMismatch,
  TooManyTimesteps,
  UnknownSubject,
  FormatError,
  FormatExhausted,
  TransportError,
  HttpError,
  MalformedResponse,
  ScriptExhausted,
  MissingField,
  InvalidClassLabel,
  InvalidThresholds,
  InvalidCount,
  MismatchedIds,
  UnknownLabel,
  SchemaViolation,
  NoSamples,
  IoError,
  ParseError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when an external generator keeps producing text that does not
/// parse as a question/answer pair. Carries how many calls were made.
class FormatExhaustedError : public Error {
 public:
  FormatExhaustedError(int attempts, const std::string& last_reason)
      : Error(ErrorKind::FormatExhausted,
              "generator output failed format validation after " +
                  std::to_string(attempts) + " attempts (last: " + last_reason + ")"),
        attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, const std::string& message)
      : Error(ErrorKind::HttpError, message), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ParseLineError : public Error {
 public:
  ParseLineError(std::size_t line, const std::string& message)
      : Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace earthforge
