#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ncgs {

enum class ErrorCode {
  kParse,           // malformed text record
  kStructural,      // well-formed input that violates a structural rule
  kIo,              // file could not be opened, read or written
  kInvalidArgument, // precondition on an argument failed
  kShape,           // tensor/architecture dimension mismatch
  kIntegrity,       // value off the quantization lattice
  kTruncation,      // payload ended before the declared symbol count
  kBadMagic,
  kBadVersion,
  kCorruptOffsets,
  kConfig,          // unknown key or invalid value in a config file
  kNoSurface,       // tensor has no zero crossing
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

  /// True for errors caused by a malformed container or payload.
  bool is_format_error() const noexcept;

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace ncgs
