#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace str {

enum class ErrorCode {
  // corpus
  MissingColumn,
  DuplicateId,
  EmptyManifest,
  WriteError,
  IoError,
  // alignment
  MissingTier,
  MalformedTextGrid,
  NonMonotonicIntervals,
  MalformedLine,
  NegativeDuration,
  // tagging
  MissingSentId,
  MalformedRow,
  // suffix memory / augmenter
  InconsistentInputs,
  MalformedMemory,
  // audio
  UnsupportedFormat,
  CorruptHeader,
  RateMismatch,
  SegmentOutOfBounds,
  // features
  TooShort,
  // mt client
  BackendUnavailable,
  MissingTranslation,
  LengthMismatch,
  InvalidRequest,
  // cli
  MalformedStats,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the toolkit. `line` is 1-based and 0 when the
/// error is not tied to a position in an input file.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::size_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

} // namespace str
