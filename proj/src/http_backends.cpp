#include "papertalk/http_backends.hpp"

#include <algorithm>

#include <httplib.h>

namespace papertalk {
namespace {

Error backend_error(const std::string& what, std::optional<int> status, bool retryable) {
  return Error(ErrorCode::kBackendError, what).with_transport(status, retryable);
}

std::string post_json(const BaseUrl& url, const std::string& path, const std::string& api_key,
                      int timeout_seconds, const Json& body) {
  httplib::Client client(url.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(timeout_seconds);
  client.set_write_timeout(30);
  client.set_bearer_token_auth(api_key);
  const auto full_path = url.path_prefix + path;
  auto res = client.Post(full_path, body.dump(), "application/json");
  if (!res) {
    throw backend_error("POST " + full_path + " failed: " + httplib::to_string(res.error()),
                        std::nullopt, true);
  }
  if (res->status < 200 || res->status >= 300) {
    std::string detail = res->body.substr(0, 200);
    throw backend_error("POST " + full_path + " returned HTTP " + std::to_string(res->status) +
                            (detail.empty() ? "" : ": " + detail),
                        res->status, false);
  }
  return res->body;
}

Json parse_body(const std::string& body) {
  auto j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) throw backend_error("backend reply is not JSON", std::nullopt, false);
  return j;
}

}  // namespace

BaseUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigError, "base URL '" + url + "' has no scheme");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::kConfigError, "base URL scheme must be http or https");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  BaseUrl out;
  out.origin = url.substr(0, path_start);
  if (out.origin.size() == scheme_end + 3) {
    throw Error(ErrorCode::kConfigError, "base URL '" + url + "' has no host");
  }
  if (path_start != std::string::npos) out.path_prefix = url.substr(path_start);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

Json chat_request_body(const std::vector<ChatMessage>& messages, const std::string& model,
                       double temperature) {
  Json j;
  j["model"] = model;
  j["messages"] = Json::array();
  for (const auto& m : messages) {
    j["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  j["temperature"] = temperature;
  return j;
}

std::string parse_chat_reply(const std::string& body) {
  const auto j = parse_body(body);
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_null()) throw backend_error("chat reply has null content", std::nullopt, false);
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw backend_error("chat reply lacks choices[0].message.content", std::nullopt, false);
  }
}

Json embedding_request_body(std::span<const std::string> texts, const std::string& model) {
  Json j;
  j["model"] = model;
  j["input"] = Json::array();
  for (const auto& t : texts) j["input"].push_back(t);
  return j;
}

std::vector<std::vector<double>> parse_embedding_reply(const std::string& body,
                                                       std::size_t expected) {
  const auto j = parse_body(body);
  try {
    const auto& data = j.at("data");
    std::vector<std::pair<std::size_t, std::vector<double>>> items;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& item = data.at(i);
      const auto index = item.contains("index") ? item.at("index").get<std::size_t>() : i;
      items.emplace_back(index, item.at("embedding").get<std::vector<double>>());
    }
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (items.size() != expected) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "embedding reply has " + std::to_string(items.size()) + " vectors for " +
                      std::to_string(expected) + " inputs");
    }
    std::vector<std::vector<double>> out;
    for (auto& [index, v] : items) out.push_back(std::move(v));
    return out;
  } catch (const nlohmann::json::exception&) {
    throw backend_error("embedding reply lacks data[*].embedding", std::nullopt, false);
  }
}

RetryPolicy retry_policy_from(const BackendConfig& config) {
  RetryPolicy p;
  p.max_attempts = config.max_attempts;
  p.base_delay = std::chrono::milliseconds(config.base_delay_ms);
  return p;
}

HttpChatBackend::HttpChatBackend(BackendConfig config, RetryPolicy retry)
    : config_(std::move(config)), url_(parse_base_url(config_.base_url)), retry_(std::move(retry)) {}

std::string HttpChatBackend::complete(const std::vector<ChatMessage>& messages) {
  const auto body = chat_request_body(messages, config_.chat_model, config_.temperature);
  const auto reply = with_retry(
      [&] { return post_json(url_, "/chat/completions", config_.api_key, config_.timeout_seconds, body); },
      retry_);
  return parse_chat_reply(reply);
}

HttpEmbeddingBackend::HttpEmbeddingBackend(BackendConfig config, RetryPolicy retry)
    : config_(std::move(config)), url_(parse_base_url(config_.base_url)), retry_(std::move(retry)) {}

std::vector<std::vector<double>> HttpEmbeddingBackend::embed_batch(
    std::span<const std::string> texts) {
  const auto body = embedding_request_body(texts, config_.embedding_model);
  const auto reply = with_retry(
      [&] { return post_json(url_, "/embeddings", config_.api_key, config_.timeout_seconds, body); },
      retry_);
  return parse_embedding_reply(reply, texts.size());
}

}  // namespace papertalk
