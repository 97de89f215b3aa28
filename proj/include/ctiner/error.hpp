#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctiner {

enum class ErrorCode {
  // entity model
  OffsetOutOfRange,
  EmptySpan,
  BadConfidence,
  InvalidUtf8,
  // sources and merging
  UnknownSourceCode,
  DuplicateSourceCode,
  EmptyPolicy,
  InconsistentSource,
  // heuristics
  BadPattern,
  UnknownPattern,
  DuplicatePattern,
  // conll
  MalformedLine,
  BadTagSyntax,
  EmptyInput,
  MisalignedSpan,
  OverlappingMentions,
  DanglingITag,
  TypeSwitchInsideEntity,
  LengthMismatch,
  // evaluation
  ShapeMismatch,
  // backends
  Timeout,
  ConnectionFailed,
  MalformedResponse,
  OffsetMismatch,
  // plumbing
  InvalidConfig,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::OffsetOutOfRange: return "OffsetOutOfRange";
    case ErrorCode::EmptySpan: return "EmptySpan";
    case ErrorCode::BadConfidence: return "BadConfidence";
    case ErrorCode::InvalidUtf8: return "InvalidUtf8";
    case ErrorCode::UnknownSourceCode: return "UnknownSourceCode";
    case ErrorCode::DuplicateSourceCode: return "DuplicateSourceCode";
    case ErrorCode::EmptyPolicy: return "EmptyPolicy";
    case ErrorCode::InconsistentSource: return "InconsistentSource";
    case ErrorCode::BadPattern: return "BadPattern";
    case ErrorCode::UnknownPattern: return "UnknownPattern";
    case ErrorCode::DuplicatePattern: return "DuplicatePattern";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::BadTagSyntax: return "BadTagSyntax";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MisalignedSpan: return "MisalignedSpan";
    case ErrorCode::OverlappingMentions: return "OverlappingMentions";
    case ErrorCode::DanglingITag: return "DanglingITag";
    case ErrorCode::TypeSwitchInsideEntity: return "TypeSwitchInsideEntity";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ConnectionFailed: return "ConnectionFailed";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::OffsetMismatch: return "OffsetMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code is stable and meant for
/// dispatch; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ctiner
