#pragma once

#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "papertalk/error.hpp"

namespace papertalk {

enum class Role { kSystem, kUser, kAssistant };

std::string_view role_name(Role role);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct TokenBudget {
  std::size_t max_total = 8192;
  std::size_t reserved_for_reply = 1024;

  std::size_t prompt_limit() const { return max_total - reserved_for_reply; }
  /// Throws kInvalidArgument unless 0 < reserved_for_reply < max_total.
  void validate() const;
};

/// Sum of estimate_tokens over message contents.
std::size_t estimate_request_tokens(const std::vector<ChatMessage>& messages);

/// Exactly one system message, in first position; user and assistant
/// messages non-empty. Throws kInvalidArgument.
void validate_messages(const std::vector<ChatMessage>& messages);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
  virtual std::string model_id() const = 0;
};

/// Validates the request, enforces the budget before touching the backend
/// (kBudgetExceeded), then returns the backend's reply.
std::string complete_chat(const std::vector<ChatMessage>& messages, ChatBackend& backend,
                          const TokenBudget& budget = {});

// Deterministic backend for tests and offline runs. Replies are consumed
// FIFO from a script; each entry is either a reply or an error to throw.
// When the script is empty the fallback responder answers, if one is set,
// otherwise the call fails with kScriptExhausted. Every request is recorded.
class MockChatBackend : public ChatBackend {
 public:
  using Responder = std::function<std::string(const std::vector<ChatMessage>&)>;

  MockChatBackend() = default;
  explicit MockChatBackend(std::vector<std::string> replies);

  void push_reply(std::string reply);
  void push_error(Error error);
  void set_fallback(Responder responder);

  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string model_id() const override { return "mock-chat"; }

  std::vector<std::vector<ChatMessage>> requests() const;
  std::size_t call_count() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mu_;
  std::deque<std::variant<std::string, Error>> script_;
  Responder fallback_;
  std::vector<std::vector<ChatMessage>> requests_;
};

/// Offline responder that plays the three pipeline roles heuristically:
/// distillation keeps the leading share of each paragraph's words, question
/// condensation echoes the follow-up, answering quotes the top context block
/// with its citation key.
MockChatBackend::Responder offline_responder();

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  // Injected so tests can run without real waiting.
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

/// Transport failures (no HTTP status), 429, and 5xx.
bool is_retryable(const Error& error);

/// Runs `call` up to policy.max_attempts times, sleeping base_delay * 2^i
/// between attempts. Non-retryable errors propagate immediately.
template <typename Call>
auto with_retry(Call&& call, const RetryPolicy& policy) -> decltype(call()) {
  for (int attempt = 1;; ++attempt) {
    try {
      return call();
    } catch (const Error& e) {
      if (!is_retryable(e) || attempt >= policy.max_attempts) throw;
      if (policy.sleep) {
        policy.sleep(policy.base_delay * (1LL << (attempt - 1)));
      }
    }
  }
}

}  // namespace papertalk
