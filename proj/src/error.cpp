#include "papertalk/error.hpp"

namespace papertalk {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kMalformedCitationKey: return "malformed_citation_key";
    case ErrorCode::kDuplicateDocument: return "duplicate_document";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEmptyReply: return "empty_reply";
    case ErrorCode::kDegenerateOriginal: return "degenerate_original";
    case ErrorCode::kDistillationRejected: return "distillation_rejected";
    case ErrorCode::kBackendError: return "backend_error";
    case ErrorCode::kBudgetExceeded: return "budget_exceeded";
    case ErrorCode::kScriptExhausted: return "script_exhausted";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kDuplicateChunkId: return "duplicate_chunk_id";
    case ErrorCode::kZeroVector: return "zero_vector";
    case ErrorCode::kEmptyIndex: return "empty_index";
    case ErrorCode::kEmptyCorpus: return "empty_corpus";
    case ErrorCode::kCorruptIndex: return "corrupt_index";
    case ErrorCode::kContextOverflow: return "context_overflow";
    case ErrorCode::kSessionBusy: return "session_busy";
    case ErrorCode::kConfigError: return "config_error";
    case ErrorCode::kIoError: return "io_error";
  }
  return "unknown";
}

}  // namespace papertalk
