#pragma once

#include <string_view>

namespace papertalk::prompts {

// Answering system prompt.
inline constexpr std::string_view kSystem =
    "Engage in insightful conversations with humans, providing meaningful, concise answers "
    "based on the provided documents. Include pertinent study citations, such as Example et "
    "al. (2020).";

// Distillation instruction; {percent} is replaced by the target ratio.
inline constexpr std::string_view kDistillTemplate =
    "Distill each paragraph of the given text, maintaining the same number of paragraphs and "
    "structure. Limit the word count to {percent} of the original, and ensure references are "
    "included.";

inline constexpr std::string_view kDistillPrefix = "Distill each paragraph of the given text";

inline constexpr std::string_view kCondense =
    "Given the conversation so far and a follow-up question, rephrase the follow-up as a "
    "standalone question.";

inline constexpr std::string_view kConversationHeader = "Conversation:";
inline constexpr std::string_view kFollowUpLabel = "Follow-up: ";
inline constexpr std::string_view kHumanLabel = "Human: ";
inline constexpr std::string_view kAssistantLabel = "Assistant: ";

inline constexpr std::string_view kContextHeader = "Context:";
inline constexpr std::string_view kQuestionLabel = "Question: ";

}  // namespace papertalk::prompts
