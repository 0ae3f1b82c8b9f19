#pragma once

#include <string>
#include <vector>

#include "papertalk/config.hpp"
#include "papertalk/embed.hpp"
#include "papertalk/json.hpp"
#include "papertalk/llm.hpp"

namespace papertalk {

struct BaseUrl {
  std::string origin;       // "https://host:port"
  std::string path_prefix;  // "/v1", no trailing slash
};

/// Throws kConfigError for anything other than http(s)://host[:port][/path].
BaseUrl parse_base_url(const std::string& url);

/// {"model", "messages": [{"role", "content"}], "temperature"}
Json chat_request_body(const std::vector<ChatMessage>& messages, const std::string& model,
                       double temperature);
/// choices[0].message.content; kBackendError when absent.
std::string parse_chat_reply(const std::string& body);

/// {"model", "input": [...]}
Json embedding_request_body(std::span<const std::string> texts, const std::string& model);
/// data[*].embedding ordered by data[*].index.
std::vector<std::vector<double>> parse_embedding_reply(const std::string& body,
                                                       std::size_t expected);

RetryPolicy retry_policy_from(const BackendConfig& config);

// POST {base}/chat/completions with bearer auth; retried per RetryPolicy.
class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(BackendConfig config, RetryPolicy retry);
  explicit HttpChatBackend(BackendConfig config)
      : HttpChatBackend(config, retry_policy_from(config)) {}

  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string model_id() const override { return config_.chat_model; }

 private:
  BackendConfig config_;
  BaseUrl url_;
  RetryPolicy retry_;
};

// POST {base}/embeddings with bearer auth; retried per RetryPolicy.
class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  HttpEmbeddingBackend(BackendConfig config, RetryPolicy retry);
  explicit HttpEmbeddingBackend(BackendConfig config)
      : HttpEmbeddingBackend(config, retry_policy_from(config)) {}

  std::string model_id() const override { return config_.embedding_model; }
  std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override;

 private:
  BackendConfig config_;
  BaseUrl url_;
  RetryPolicy retry_;
};

}  // namespace papertalk
