#include "cfgroup/error.hpp"

namespace cfgroup {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kTooFewPoints: return "too-few-points";
    case ErrorCode::kDegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::kMissingNormals: return "missing-normals";
    case ErrorCode::kEmptySet: return "empty-set";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kSingleClass: return "single-class-data";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kCorruption: return "corruption";
    case ErrorCode::kMissingSimilarity: return "missing-similarity";
    case ErrorCode::kMissingRatio: return "missing-ratio";
    case ErrorCode::kEstimationFailed: return "estimation-failed";
    case ErrorCode::kMalformedHeader: return "malformed-header";
    case ErrorCode::kUnsupportedPropertyType: return "unsupported-property-type";
    case ErrorCode::kTruncatedBody: return "truncated-body";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIndexOutOfRange: return "index-out-of-range";
    case ErrorCode::kNonRigidMatrix: return "non-rigid-matrix";
    case ErrorCode::kSamplingFailed: return "sampling-failed";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace cfgroup
