#pragma once

#include <memory>
#include <optional>
#include <string>

#include "papertalk/error.hpp"
#include "papertalk/json.hpp"
#include "papertalk/workspace.hpp"

namespace papertalk {

struct ApiError {
  std::string code;  // error_code_name() of the originating ErrorCode
  std::string message;
  std::optional<std::string> stage;
  int http_status = 500;
};

/// Total over ErrorCode; each code maps to exactly one status.
int http_status_for(ErrorCode code);
ApiError api_error_for(const Error& error);
Json to_json(const ApiError& error);

// JSON API over a Workspace:
//   POST /documents                    {citation_key, title, text} -> {doc_id}
//   POST /documents/{doc_id}/distill   {target_ratio?} -> DistillationReport
//   POST /index/rebuild                -> {chunks_indexed}
//   GET  /documents                    -> [{doc_id, citation_key, title, source_kind}]
//   POST /sessions                     -> {session_id}
//   POST /sessions/{id}/messages       {query} -> ChatTurn
//   GET  /sessions/{id}                -> {session_id, turns}
//   GET  /healthz                      -> {status, mock_mode}
// Errors come back as {code, message, stage?}.
class Service {
 public:
  explicit Service(Workspace& workspace);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port. Throws kConfigError.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires bind().
  void serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace papertalk
