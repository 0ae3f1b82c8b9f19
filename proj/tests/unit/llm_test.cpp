#include <gtest/gtest.h>

#include "papertalk/corpus.hpp"
#include "papertalk/llm.hpp"
#include "papertalk/prompts.hpp"
#include "test_util.hpp"

namespace papertalk {
namespace {

std::vector<ChatMessage> request(std::string user) {
  return {{Role::kSystem, "sys"}, {Role::kUser, std::move(user)}};
}

TEST(MockChatBackend, RepliesInOrderAndRecordsRequests) {
  MockChatBackend backend({"one", "two"});
  EXPECT_EQ(backend.complete(request("a")), "one");
  EXPECT_EQ(backend.complete(request("b")), "two");
  ASSERT_EQ(backend.requests().size(), 2u);
  EXPECT_EQ(backend.requests()[0], request("a"));
  EXPECT_EQ(backend.requests()[1][1].content, "b");
  EXPECT_EQ(backend.remaining(), 0u);
  try {
    backend.complete(request("c"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScriptExhausted);
  }
  EXPECT_EQ(backend.call_count(), 3u);
}

TEST(MockChatBackend, ScriptedErrorsAndFallback) {
  MockChatBackend backend;
  backend.push_error(Error(ErrorCode::kBackendError, "down"));
  backend.push_reply("ok");
  backend.set_fallback([](const std::vector<ChatMessage>& m) { return "echo " + m.back().content; });
  EXPECT_THROW(backend.complete(request("a")), Error);
  EXPECT_EQ(backend.complete(request("b")), "ok");
  EXPECT_EQ(backend.complete(request("c")), "echo c");
}

TEST(ValidateMessages, SystemFirstAndOnlyOnce) {
  EXPECT_NO_THROW(validate_messages(request("q")));
  EXPECT_THROW(validate_messages({{Role::kUser, "q"}}), Error);
  EXPECT_THROW(validate_messages({{Role::kUser, "q"}, {Role::kSystem, "s"}}), Error);
  EXPECT_THROW(validate_messages({{Role::kSystem, "s"}, {Role::kSystem, "t"}}), Error);
  EXPECT_THROW(validate_messages({{Role::kSystem, "s"}, {Role::kUser, ""}}), Error);
  EXPECT_THROW(validate_messages({}), Error);
}

TEST(CompleteChat, OverBudgetNeverReachesBackend) {
  // 36,000 ASCII characters estimate to 9,000 tokens against a 7,168 prompt limit.
  MockChatBackend backend({"unused"});
  try {
    complete_chat(request(std::string(36000 - 3, 'x')), backend);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
  }
  EXPECT_EQ(backend.call_count(), 0u);
}

TEST(CompleteChat, BudgetBoundaryProperty) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> total(64, 4096), len(0, 20000);
  for (int trial = 0; trial < 500; ++trial) {
    TokenBudget budget;
    budget.max_total = total(rng);
    budget.reserved_for_reply = budget.max_total / 8 + 1;
    MockChatBackend backend;
    backend.set_fallback([](const auto&) { return "r"; });
    const auto messages = request(std::string(len(rng) + 1, 'y'));
    const bool fits = estimate_request_tokens(messages) <= budget.prompt_limit();
    bool sent = true;
    try {
      complete_chat(messages, backend, budget);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
      sent = false;
    }
    EXPECT_EQ(sent, fits);
    EXPECT_EQ(backend.call_count(), fits ? 1u : 0u);
  }
}

TEST(TokenBudget, DefaultsAndValidation) {
  TokenBudget b;
  EXPECT_EQ(b.max_total, 8192u);
  EXPECT_EQ(b.prompt_limit(), 7168u);
  b.reserved_for_reply = 8192;
  EXPECT_THROW(b.validate(), Error);
}

struct RetryHarness {
  std::vector<std::chrono::milliseconds> sleeps;
  RetryPolicy policy() {
    RetryPolicy p;
    p.sleep = [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
    return p;
  }
};

Error transport(std::optional<int> status, bool retryable) {
  return Error(ErrorCode::kBackendError, "x").with_transport(status, retryable);
}

TEST(WithRetry, RecoversFromTwoTransientFailures) {
  RetryHarness h;
  int calls = 0;
  auto out = with_retry(
      [&] {
        if (++calls < 3) throw transport(503, false);
        return std::string("fine");
      },
      h.policy());
  EXPECT_EQ(out, "fine");
  EXPECT_EQ(calls, 3);
  ASSERT_EQ(h.sleeps.size(), 2u);
  EXPECT_EQ(h.sleeps[0], std::chrono::seconds(1));
  EXPECT_EQ(h.sleeps[1], std::chrono::seconds(2));
}

TEST(WithRetry, ClientErrorsAreNotRetried) {
  RetryHarness h;
  int calls = 0;
  EXPECT_THROW(with_retry([&]() -> int { ++calls; throw transport(400, false); }, h.policy()), Error);
  EXPECT_EQ(calls, 1);
  EXPECT_TRUE(h.sleeps.empty());
}

TEST(WithRetry, PersistentRateLimitExhaustsAttempts) {
  RetryHarness h;
  int calls = 0;
  try {
    with_retry([&]() -> int { ++calls; throw transport(429, false); }, h.policy());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.http_status(), 429);
  }
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(h.sleeps.size(), 2u);
}

TEST(IsRetryable, Classification) {
  EXPECT_TRUE(is_retryable(transport(std::nullopt, true)));
  EXPECT_FALSE(is_retryable(transport(std::nullopt, false)));
  EXPECT_TRUE(is_retryable(transport(429, false)));
  EXPECT_TRUE(is_retryable(transport(500, false)));
  EXPECT_TRUE(is_retryable(transport(599, false)));
  EXPECT_FALSE(is_retryable(transport(404, false)));
  EXPECT_FALSE(is_retryable(Error(ErrorCode::kInvalidArgument, "x")));
}

TEST(OfflineResponder, DistillKeepsRatioOfEachParagraph) {
  auto responder = offline_responder();
  std::vector<ChatMessage> messages = {
      {Role::kSystem, "Distill each paragraph of the given text, maintaining the same number of "
                      "paragraphs and structure. Limit the word count to 50% of the original, and "
                      "ensure references are included."},
      {Role::kUser, "a b c d\n\ne f g h i j"}};
  EXPECT_EQ(responder(messages), "a b\n\ne f g");
}

TEST(OfflineResponder, CondenseEchoesFollowUp) {
  auto responder = offline_responder();
  std::vector<ChatMessage> messages = {
      {Role::kSystem, std::string(prompts::kCondense)},
      {Role::kUser, "Conversation:\nHuman: hi\nAssistant: hello\n\nFollow-up: and the bar?"}};
  EXPECT_EQ(responder(messages), "and the bar?");
}

TEST(Prompts, PublishedWording) {
  EXPECT_EQ(std::string(prompts::kSystem),
            "Engage in insightful conversations with humans, providing meaningful, concise "
            "answers based on the provided documents. Include pertinent study citations, such "
            "as Example et al. (2020).");
  EXPECT_EQ(role_name(Role::kAssistant), "assistant");
}

}  // namespace
}  // namespace papertalk
