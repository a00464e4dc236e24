#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpscene {

enum class ErrorCode {
  MissingJoint,
  DegeneratePose,
  NonFiniteInput,
  JointCountMismatch,
  DepthTooSmall,
  MissingGroundTruth,
  PredictionNotFound,
  SchemaViolation,
  FewerThanTwoPoses,
  DegenerateScaling,
  DegenerateConfiguration,
  ZeroNormPose,
  InvalidSpec,
  InvalidArgument,
  IoFailure,
  ScenePairMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it onto a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mpscene
