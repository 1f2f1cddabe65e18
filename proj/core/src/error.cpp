#include "ncgs/error.hpp"

namespace ncgs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kStructural: return "structural error";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kIntegrity: return "integrity error";
    case ErrorCode::kTruncation: return "truncation error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadVersion: return "unsupported version";
    case ErrorCode::kCorruptOffsets: return "corrupt section offsets";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kNoSurface: return "no extractable surface";
  }
  return "error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

bool Error::is_format_error() const noexcept {
  switch (code_) {
    case ErrorCode::kIntegrity:
    case ErrorCode::kTruncation:
    case ErrorCode::kBadMagic:
    case ErrorCode::kBadVersion:
    case ErrorCode::kCorruptOffsets:
      return true;
    default:
      return false;
  }
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace ncgs
