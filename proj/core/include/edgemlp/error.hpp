#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgemlp {

enum class ErrorCode {
  // idx / dataset
  UnknownMagic,
  TruncatedPayload,
  TrailingBytes,
  MissingFile,
  LabelOutOfRange,
  DegenerateClass,
  // features / numerics
  NonFiniteInput,
  DimensionMismatch,
  DomainError,
  InvalidParameter,
  ShapeMismatch,
  BatchTooSmall,
  StaleCache,
  OutOfOrderEpoch,
  // persistence / cli
  IoError,
  BadMagic,
  VersionUnsupported,
  ChecksumMismatch,
  ClassCountMismatch,
  BadImageShape,
  EmptyInput,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (tests, the CLI's exit-code mapping) can branch without parsing
/// messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// what() without the code prefix, for re-raising with added context.
  [[nodiscard]] const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace edgemlp
