// SPDX-License-Identifier: Apache-2.0
#include "earthforge/error.hpp"

namespace earthforge {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::AllPixelsInvalid: return "AllPixelsInvalid";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidTarget: return "InvalidTarget";
    case ErrorKind::NonDivisible: return "NonDivisible";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::TooManyTimesteps: return "TooManyTimesteps";
    case ErrorKind::UnknownSubject: return "UnknownSubject";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::FormatExhausted: return "FormatExhausted";
    case ErrorKind::TransportError: return "TransportError";
    case ErrorKind::HttpError: return "HttpError";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::ScriptExhausted: return "ScriptExhausted";
    case ErrorKind::MissingField: return "MissingField";
    case ErrorKind::InvalidClassLabel: return "InvalidClassLabel";
    case ErrorKind::InvalidThresholds: return "InvalidThresholds";
    case ErrorKind::InvalidCount: return "InvalidCount";
    case ErrorKind::MismatchedIds: return "MismatchedIds";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::NoSamples: return "NoSamples";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace earthforge
