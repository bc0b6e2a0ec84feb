#include "hallufix/error.h"

namespace hallufix {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileUnreadable: return "FileUnreadable";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kSerializationFailure: return "SerializationFailure";
    case ErrorCode::kEndpointUnreachable: return "EndpointUnreachable";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kMissingReference: return "MissingReference";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::kCorruptModelFile: return "CorruptModelFile";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kScorerFailure: return "ScorerFailure";
    case ErrorCode::kAllZeroCounts: return "AllZeroCounts";
    case ErrorCode::kMissingGoldFlag: return "MissingGoldFlag";
    case ErrorCode::kEmptyOutcomes: return "EmptyOutcomes";
    case ErrorCode::kEmptyLabels: return "EmptyLabels";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

}  // namespace hallufix
