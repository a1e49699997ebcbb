#include "posesync/error.h"

namespace posesync {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateMatrix: return "DegenerateMatrix";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kInsufficientScans: return "InsufficientScans";
    case ErrorCode::kMissingFeatures: return "MissingFeatures";
    case ErrorCode::kEmptyScan: return "EmptyScan";
    case ErrorCode::kMissingDescriptors: return "MissingDescriptors";
    case ErrorCode::kTooFewCorrespondences: return "TooFewCorrespondences";
    case ErrorCode::kNoConsensus: return "NoConsensus";
    case ErrorCode::kDisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::kDegenerateBlock: return "DegenerateBlock";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kMissingInlierCount: return "MissingInlierCount";
    case ErrorCode::kMissingRelativePose: return "MissingRelativePose";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kEmptyComponent: return "EmptyComponent";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidGraph: return "InvalidGraph";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyEvaluationSet: return "EmptyEvaluationSet";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string_view module, const std::string& detail)
    : std::runtime_error(std::string(module) + ": " +
                         std::string(ErrorCodeName(code)) + ": " + detail),
      code_(code),
      module_(module) {}

}  // namespace posesync
