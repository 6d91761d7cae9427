#pragma once

#include <stdexcept>
#include <string>

namespace cfgroup {

enum class ErrorCode {
  kInvalidArgument,
  kTooFewPoints,
  kDegenerateConfiguration,
  kMissingNormals,
  kEmptySet,
  kDimensionMismatch,
  kSingleClass,
  kDivergence,
  kIo,
  kVersionMismatch,
  kCorruption,
  kMissingSimilarity,
  kMissingRatio,
  kEstimationFailed,
  kMalformedHeader,
  kUnsupportedPropertyType,
  kTruncatedBody,
  kParse,
  kIndexOutOfRange,
  kNonRigidMatrix,
  kSamplingFailed,
};

/// Stable identifier for an error code, e.g. "too-few-points".
const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI) can branch on the kind of failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cfgroup
