#include "str/error.h"

namespace str {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::WriteError: return "WriteError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingTier: return "MissingTier";
    case ErrorCode::MalformedTextGrid: return "MalformedTextGrid";
    case ErrorCode::NonMonotonicIntervals: return "NonMonotonicIntervals";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NegativeDuration: return "NegativeDuration";
    case ErrorCode::MissingSentId: return "MissingSentId";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::InconsistentInputs: return "InconsistentInputs";
    case ErrorCode::MalformedMemory: return "MalformedMemory";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::SegmentOutOfBounds: return "SegmentOutOfBounds";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::MissingTranslation: return "MissingTranslation";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::MalformedStats: return "MalformedStats";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

namespace {

std::string format(ErrorCode code, const std::string& message, std::size_t line) {
  std::string out(to_string(code));
  if (line > 0) {
    out += " (line " + std::to_string(line) + ")";
  }
  if (!message.empty()) {
    out += ": " + message;
  }
  return out;
}

} // namespace

Error::Error(ErrorCode code, std::string message, std::size_t line)
    : std::runtime_error(format(code, message, line)), code_(code), line_(line) {}

} // namespace str
