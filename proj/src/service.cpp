#include "papertalk/service.hpp"

#include <httplib.h>

namespace papertalk {
namespace {

void reply_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const ApiError& error) {
  reply_json(res, error.http_status, to_json(error));
}

// Parses a JSON object body; an empty body counts as {}.
Json object_body(const httplib::Request& req) {
  if (trim(req.body).empty()) return Json::object();
  auto j = Json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  }
  return j;
}

std::string string_field(const Json& body, const char* key) {
  if (!body.contains(key)) return {};
  if (!body.at(key).is_string()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("'") + key + "' must be a string");
  }
  return body.at(key).get<std::string>();
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      reply_error(res, api_error_for(e));
    } catch (const std::exception& e) {
      reply_error(res, ApiError{"internal_error", e.what(), std::nullopt, 500});
    }
  };
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput:
    case ErrorCode::kMalformedCitationKey:
    case ErrorCode::kInvalidArgument:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kDuplicateDocument:
    case ErrorCode::kSessionBusy:
    case ErrorCode::kEmptyIndex:
    case ErrorCode::kEmptyCorpus:
      return 409;
    case ErrorCode::kDegenerateOriginal:
    case ErrorCode::kDistillationRejected:
    case ErrorCode::kBudgetExceeded:
    case ErrorCode::kContextOverflow:
      return 422;
    case ErrorCode::kBackendError:
    case ErrorCode::kEmptyReply:
    case ErrorCode::kScriptExhausted:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kZeroVector:
      return 502;
    case ErrorCode::kDuplicateChunkId:
    case ErrorCode::kCorruptIndex:
    case ErrorCode::kConfigError:
    case ErrorCode::kIoError:
      return 500;
  }
  return 500;
}

ApiError api_error_for(const Error& error) {
  return ApiError{std::string(error_code_name(error.code())), error.what(), error.stage(),
                  http_status_for(error.code())};
}

Json to_json(const ApiError& error) {
  Json j;
  j["code"] = error.code;
  j["message"] = error.message;
  if (error.stage) j["stage"] = *error.stage;
  return j;
}

struct Service::Impl {
  explicit Impl(Workspace& ws) : workspace(ws) {}

  Workspace& workspace;
  httplib::Server server;
  bool bound = false;
};

Service::Service(Workspace& workspace) : impl_(std::make_unique<Impl>(workspace)) {
  auto& srv = impl_->server;
  Workspace& ws = workspace;

  srv.Get("/healthz", guarded([&ws](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, Json{{"status", "ok"}, {"mock_mode", ws.mock_mode()}});
  }));

  srv.Post("/documents", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
    if (trim(req.body).empty()) throw Error(ErrorCode::kEmptyInput, "request body is empty");
    const auto body = object_body(req);
    const auto doc_id = ws.add_document(string_field(body, "text"), string_field(body, "citation_key"),
                                        string_field(body, "title"));
    reply_json(res, 201, Json{{"doc_id", doc_id}});
  }));

  srv.Get("/documents", guarded([&ws](const httplib::Request&, httplib::Response& res) {
    Json list = Json::array();
    for (const auto& d : ws.list_documents()) list.push_back(to_json(d));
    reply_json(res, 200, list);
  }));

  srv.Post(R"(/documents/([^/]+)/distill)",
           guarded([&ws](const httplib::Request& req, httplib::Response& res) {
             const auto body = object_body(req);
             std::optional<double> ratio;
             if (body.contains("target_ratio")) {
               if (!body.at("target_ratio").is_number()) {
                 throw Error(ErrorCode::kInvalidArgument, "'target_ratio' must be a number");
               }
               ratio = body.at("target_ratio").get<double>();
             }
             const auto report = ws.distill(req.matches[1].str(), ratio);
             reply_json(res, 200, to_json(report));
           }));

  srv.Post("/index/rebuild", guarded([&ws](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, Json{{"chunks_indexed", ws.rebuild_index()}});
  }));

  srv.Post("/sessions", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
    object_body(req);
    reply_json(res, 201, Json{{"session_id", ws.create_session()}});
  }));

  srv.Post(R"(/sessions/([^/]+)/messages)",
           guarded([&ws](const httplib::Request& req, httplib::Response& res) {
             const auto body = object_body(req);
             const auto session_id = req.matches[1].str();
             const auto query = string_field(body, "query");
             if (trim(query).empty()) throw Error(ErrorCode::kEmptyInput, "'query' is empty");
             reply_json(res, 200, to_json(ws.post_message(session_id, query)));
           }));

  srv.Get(R"(/sessions/([^/]+))", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
    const auto session_id = req.matches[1].str();
    reply_json(res, 200, transcript_json(session_id, ws.transcript(session_id)));
  }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      reply_error(res, ApiError{"not_found", "no such endpoint", std::nullopt, 404});
    }
  });
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  int bound = 0;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    bound = port;
  } else {
    bound = -1;
  }
  if (bound <= 0) {
    throw Error(ErrorCode::kConfigError,
                "cannot bind " + host + ":" + std::to_string(port) + " (port busy or host invalid)");
  }
  impl_->bound = true;
  return bound;
}

void Service::serve() {
  if (!impl_->bound) throw Error(ErrorCode::kConfigError, "serve() called before bind()");
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

}  // namespace papertalk
