#include "papertalk/llm.hpp"

#include <sstream>

#include "papertalk/corpus.hpp"
#include "papertalk/prompts.hpp"

namespace papertalk {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

void TokenBudget::validate() const {
  if (reserved_for_reply == 0 || reserved_for_reply >= max_total) {
    throw Error(ErrorCode::kInvalidArgument,
                "token budget needs 0 < reserved_for_reply < max_total");
  }
}

std::size_t estimate_request_tokens(const std::vector<ChatMessage>& messages) {
  std::size_t total = 0;
  for (const auto& m : messages) total += estimate_tokens(m.content);
  return total;
}

void validate_messages(const std::vector<ChatMessage>& messages) {
  if (messages.empty() || messages.front().role != Role::kSystem) {
    throw Error(ErrorCode::kInvalidArgument, "request must start with a system message");
  }
  for (std::size_t i = 1; i < messages.size(); ++i) {
    if (messages[i].role == Role::kSystem) {
      throw Error(ErrorCode::kInvalidArgument, "request has more than one system message");
    }
    if (trim(messages[i].content).empty()) {
      throw Error(ErrorCode::kInvalidArgument, "user and assistant messages must be non-empty");
    }
  }
}

std::string complete_chat(const std::vector<ChatMessage>& messages, ChatBackend& backend,
                          const TokenBudget& budget) {
  validate_messages(messages);
  const auto tokens = estimate_request_tokens(messages);
  if (tokens > budget.prompt_limit()) {
    throw Error(ErrorCode::kBudgetExceeded,
                "request estimated at " + std::to_string(tokens) + " tokens exceeds the " +
                    std::to_string(budget.prompt_limit()) + "-token prompt limit");
  }
  return backend.complete(messages);
}

MockChatBackend::MockChatBackend(std::vector<std::string> replies) {
  for (auto& r : replies) script_.emplace_back(std::move(r));
}

void MockChatBackend::push_reply(std::string reply) {
  std::lock_guard lock(mu_);
  script_.emplace_back(std::move(reply));
}

void MockChatBackend::push_error(Error error) {
  std::lock_guard lock(mu_);
  script_.emplace_back(std::move(error));
}

void MockChatBackend::set_fallback(Responder responder) {
  std::lock_guard lock(mu_);
  fallback_ = std::move(responder);
}

std::string MockChatBackend::complete(const std::vector<ChatMessage>& messages) {
  std::unique_lock lock(mu_);
  requests_.push_back(messages);
  if (script_.empty()) {
    if (!fallback_) {
      throw Error(ErrorCode::kScriptExhausted,
                  "mock backend script exhausted after " + std::to_string(requests_.size() - 1) +
                      " replies");
    }
    auto fallback = fallback_;
    lock.unlock();
    return fallback(messages);
  }
  auto next = std::move(script_.front());
  script_.pop_front();
  if (auto* err = std::get_if<Error>(&next)) throw *err;
  return std::get<std::string>(std::move(next));
}

std::vector<std::vector<ChatMessage>> MockChatBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::size_t MockChatBackend::call_count() const {
  std::lock_guard lock(mu_);
  return requests_.size();
}

std::size_t MockChatBackend::remaining() const {
  std::lock_guard lock(mu_);
  return script_.size();
}

bool is_retryable(const Error& error) {
  if (error.code() != ErrorCode::kBackendError) return false;
  const auto status = error.http_status();
  if (!status) return error.retryable();
  return *status == 429 || (*status >= 500 && *status <= 599);
}

namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

double ratio_from_instruction(std::string_view instruction) {
  constexpr std::string_view kMarker = "word count to ";
  auto pos = instruction.find(kMarker);
  if (pos == std::string_view::npos) return 0.5;
  pos += kMarker.size();
  auto end = instruction.find('%', pos);
  if (end == std::string_view::npos) return 0.5;
  try {
    return std::stod(std::string(instruction.substr(pos, end - pos))) / 100.0;
  } catch (const std::exception&) {
    return 0.5;
  }
}

std::string leading_words(std::string_view text, std::size_t n) {
  std::istringstream in{std::string(text)};
  std::string word, out;
  for (std::size_t i = 0; i < n && in >> word; ++i) {
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

std::string offline_distill(const std::vector<ChatMessage>& messages) {
  const double ratio = ratio_from_instruction(messages.front().content);
  std::string out;
  for (const auto& para : split_paragraphs(messages.back().content)) {
    const auto words = word_count(para);
    auto keep = static_cast<std::size_t>(std::llround(static_cast<double>(words) * ratio));
    if (keep == 0) keep = 1;
    if (!out.empty()) out += "\n\n";
    out += leading_words(para, keep);
  }
  return out;
}

std::string offline_condense(const std::vector<ChatMessage>& messages) {
  const std::string& body = messages.back().content;
  auto pos = body.rfind(prompts::kFollowUpLabel);
  if (pos == std::string::npos) return trim(body);
  return trim(std::string_view(body).substr(pos + prompts::kFollowUpLabel.size()));
}

std::string offline_answer(const std::vector<ChatMessage>& messages) {
  // Context blocks look like "[Key]\ntext"; quote the first block and name
  // the next distinct source.
  const std::string& body = messages.back().content;
  std::vector<std::pair<std::string, std::string>> blocks;
  for (const auto& para : split_paragraphs(body)) {
    if (para.size() > 2 && para.front() == '[') {
      auto close = para.find("]\n");
      if (close != std::string::npos) {
        blocks.emplace_back(para.substr(1, close - 1), para.substr(close + 2));
      }
    }
  }
  if (blocks.empty()) return "The provided documents do not address this question.";
  std::string answer =
      "According to " + blocks.front().first + ", " + leading_words(blocks.front().second, 30);
  for (const auto& [key, text] : blocks) {
    if (key != blocks.front().first) {
      answer += " See also " + key + ".";
      break;
    }
  }
  return answer;
}

}  // namespace

MockChatBackend::Responder offline_responder() {
  return [](const std::vector<ChatMessage>& messages) -> std::string {
    const std::string& system = messages.front().content;
    if (starts_with(system, prompts::kDistillPrefix)) return offline_distill(messages);
    if (starts_with(system, prompts::kCondense)) return offline_condense(messages);
    return offline_answer(messages);
  };
}

}  // namespace papertalk
