#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace posesync {

enum class ErrorCode {
  kDegenerateMatrix,
  kDegenerateConfiguration,
  kDimensionMismatch,
  kNotNormalized,
  kInsufficientScans,
  kMissingFeatures,
  kEmptyScan,
  kMissingDescriptors,
  kTooFewCorrespondences,
  kNoConsensus,
  kDisconnectedGraph,
  kDegenerateBlock,
  kSingularSystem,
  kMissingInlierCount,
  kMissingRelativePose,
  kOutOfRange,
  kEmptyComponent,
  kInvalidSpec,
  kInvalidGraph,
  kInvalidArgument,
  kEmptyEvaluationSet,
  kEmptyInput,
  kIo,
  kParse,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception. The message is
// prefixed with the originating module, e.g. "sync: DisconnectedGraph: ...".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string_view module, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace posesync
