#include "tpis/error.h"

namespace tpis {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMissingMetaFeatures: return "MissingMetaFeatures";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kUnimputableColumn: return "UnimputableColumn";
    case ErrorCode::kInsufficientClassSize: return "InsufficientClassSize";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kDegenerateFold: return "DegenerateFold";
    case ErrorCode::kStepTwoUnavailable: return "StepTwoUnavailable";
    case ErrorCode::kInvalidTable: return "InvalidTable";
    case ErrorCode::kEmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::kSpecError: return "SpecError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kCellError: return "CellError";
    case ErrorCode::kVersionError: return "VersionError";
    case ErrorCode::kArchiveError: return "ArchiveError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace tpis
