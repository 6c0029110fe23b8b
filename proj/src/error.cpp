#include "mui/error.hpp"

namespace mui {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kTruncated: return "truncated file";
    case ErrorCode::kChecksumMismatch: return "checksum mismatch";
    case ErrorCode::kHashMismatch: return "hash mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kInsufficientData: return "insufficient data";
    case ErrorCode::kSingularFit: return "singular fit";
    case ErrorCode::kUndefined: return "undefined";
  }
  return "unknown error";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kSingularFit:
    case ErrorCode::kUndefined:
      return true;
    default:
      return false;
  }
}

}  // namespace mui
