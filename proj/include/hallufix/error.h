#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hallufix {

enum class ErrorCode {
  kFileUnreadable,
  kMalformedRecord,
  kDuplicateId,
  kIoFailure,
  kSerializationFailure,
  kEndpointUnreachable,
  kProtocolViolation,
  kTimeout,
  kMissingReference,
  kSchemaMismatch,
  kEmptyTrainingSet,
  kNonFiniteLoss,
  kSchemaVersionMismatch,
  kCorruptModelFile,
  kCountMismatch,
  kScorerFailure,
  kAllZeroCounts,
  kMissingGoldFlag,
  kEmptyOutcomes,
  kEmptyLabels,
  kConfigInvalid,
};

std::string_view error_code_name(ErrorCode code);

// Every failure surfaced by the library carries a code and the module that
// raised it, so the CLI can report provenance without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& detail)
      : std::runtime_error(detail), code_(code), module_(std::move(module)) {}

  ErrorCode code() const { return code_; }
  const std::string& module() const { return module_; }

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace hallufix
