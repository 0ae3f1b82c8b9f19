#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace papertalk {

// Closed set of failure kinds surfaced by every module. The service maps
// each one onto exactly one API error code.
enum class ErrorCode {
  kEmptyInput,
  kMalformedCitationKey,
  kDuplicateDocument,
  kNotFound,
  kInvalidArgument,
  kEmptyReply,
  kDegenerateOriginal,
  kDistillationRejected,
  kBackendError,
  kBudgetExceeded,
  kScriptExhausted,
  kDimensionMismatch,
  kDuplicateChunkId,
  kZeroVector,
  kEmptyIndex,
  kEmptyCorpus,
  kCorruptIndex,
  kContextOverflow,
  kSessionBusy,
  kConfigError,
  kIoError,
};

inline constexpr ErrorCode kAllErrorCodes[] = {
    ErrorCode::kEmptyInput,        ErrorCode::kMalformedCitationKey,
    ErrorCode::kDuplicateDocument, ErrorCode::kNotFound,
    ErrorCode::kInvalidArgument,   ErrorCode::kEmptyReply,
    ErrorCode::kDegenerateOriginal, ErrorCode::kDistillationRejected,
    ErrorCode::kBackendError,      ErrorCode::kBudgetExceeded,
    ErrorCode::kScriptExhausted,   ErrorCode::kDimensionMismatch,
    ErrorCode::kDuplicateChunkId,  ErrorCode::kZeroVector,
    ErrorCode::kEmptyIndex,        ErrorCode::kEmptyCorpus,
    ErrorCode::kCorruptIndex,      ErrorCode::kContextOverflow,
    ErrorCode::kSessionBusy,       ErrorCode::kConfigError,
    ErrorCode::kIoError,
};

/// Stable snake_case name, e.g. "budget_exceeded".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Pipeline stage that raised the error ("condense", "retrieve", ...),
  // set by run_turn and the workspace when an error crosses a stage boundary.
  const std::optional<std::string>& stage() const noexcept { return stage_; }
  Error& with_stage(std::string stage) {
    stage_ = std::move(stage);
    return *this;
  }

  // HTTP status for backend failures, when one was received.
  std::optional<int> http_status() const noexcept { return http_status_; }
  bool retryable() const noexcept { return retryable_; }
  Error& with_transport(std::optional<int> status, bool retryable) {
    http_status_ = status;
    retryable_ = retryable;
    return *this;
  }

 private:
  ErrorCode code_;
  std::optional<std::string> stage_;
  std::optional<int> http_status_;
  bool retryable_ = false;
};

}  // namespace papertalk
