#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tpis {

enum class ErrorCode {
  kInvalidArgument,
  kMissingMetaFeatures,
  kEmptyDataset,
  kInsufficientData,
  kUnimputableColumn,
  kInsufficientClassSize,
  kDegenerateLabels,
  kShapeError,
  kDegenerateFold,
  kStepTwoUnavailable,
  kInvalidTable,
  kEmptyEvaluation,
  kSpecError,
  kSchemaError,
  kCellError,
  kVersionError,
  kArchiveError,
  kConfigError,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this type. The code identifies
// the error class; the message carries the details (row numbers, names, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tpis
