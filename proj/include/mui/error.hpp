#pragma once

#include <stdexcept>
#include <string>

namespace mui {

enum class ErrorCode {
  kIo,
  kFormat,
  kVersionMismatch,
  kTruncated,
  kChecksumMismatch,
  kHashMismatch,
  kInvalidArgument,
  kShapeMismatch,
  kDivergence,
  kInsufficientData,
  kSingularFit,
  kUndefined,
};

const char* to_string(ErrorCode code);

// Validation-type errors map to CLI exit code 2, data errors to 3.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mui
