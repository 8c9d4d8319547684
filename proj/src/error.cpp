#include "pap/error.hpp"

namespace pap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateRay: return "DegenerateRay";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kGridTooDense: return "GridTooDense";
    case ErrorCode::kBadIndex: return "BadIndex";
    case ErrorCode::kUnparseableResponse: return "UnparseableResponse";
    case ErrorCode::kEmptyGridBoxes: return "EmptyGridBoxes";
    case ErrorCode::kBackendError: return "BackendError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kNoDetection: return "NoDetection";
    case ErrorCode::kMaskDimMismatch: return "MaskDimMismatch";
    case ErrorCode::kGroundingFailed: return "GroundingFailed";
    case ErrorCode::kUnknownImage: return "UnknownImage";
    case ErrorCode::kEmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::kDatasetFormatError: return "DatasetFormatError";
    case ErrorCode::kDegenerateRegion: return "DegenerateRegion";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
  }
  return "Unknown";
}

}  // namespace pap
