#include "papertalk/chat.hpp"

#include "papertalk/prompts.hpp"

namespace papertalk {
namespace {

constexpr std::string_view kBlockSeparator = "\n\n";

std::string history_text(const std::vector<ChatTurn>& history, std::size_t first,
                         std::string_view query) {
  std::string out(prompts::kConversationHeader);
  for (std::size_t i = first; i < history.size(); ++i) {
    out += '\n';
    out += prompts::kHumanLabel;
    out += history[i].user_query;
    out += '\n';
    out += prompts::kAssistantLabel;
    out += history[i].answer;
  }
  out += "\n\n";
  out += prompts::kFollowUpLabel;
  out += query;
  return out;
}

std::string question_text(std::string_view question) {
  return std::string(kBlockSeparator) + std::string(prompts::kQuestionLabel) + std::string(question);
}

class InFlightGuard {
 public:
  explicit InFlightGuard(std::atomic<bool>& flag) : flag_(flag) {
    bool expected = false;
    if (!flag_.compare_exchange_strong(expected, true)) {
      throw Error(ErrorCode::kSessionBusy, "a turn is already in progress for this session");
    }
  }
  ~InFlightGuard() { flag_.store(false); }
  InFlightGuard(const InFlightGuard&) = delete;
  InFlightGuard& operator=(const InFlightGuard&) = delete;

 private:
  std::atomic<bool>& flag_;
};

template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (Error& e) {
    if (!e.stage()) e.with_stage(stage);
    throw;
  }
}

}  // namespace

CitationDirectory::CitationDirectory(const Corpus& corpus) {
  for (const auto& [id, entry] : corpus.entries()) add(entry.raw.citation_key, entry.raw.doc_id);
}

void CitationDirectory::add(std::string_view citation_key, std::string doc_id) {
  auto key = parse_citation_key(citation_key);
  if (!key) {
    throw Error(ErrorCode::kMalformedCitationKey,
                "citation key '" + std::string(citation_key) + "' is malformed");
  }
  by_key_.insert_or_assign(key->normalized(), std::move(doc_id));
}

const std::string* CitationDirectory::lookup(const CitationKey& key) const {
  auto it = by_key_.find(key.normalized());
  return it == by_key_.end() ? nullptr : &it->second;
}

CitationReport ground_citations(std::string_view answer, const CitationDirectory& directory) {
  CitationReport report;
  for (auto& match : find_citations(answer)) {
    report.detected.push_back(match.text);
    if (const auto* doc_id = directory.lookup(match.key)) {
      report.grounded.push_back(std::move(match.text));
      report.grounded_doc_ids.push_back(*doc_id);
    } else {
      report.ungrounded.push_back(std::move(match.text));
    }
  }
  return report;
}

CitationReport ground_citations(std::string_view answer, const Corpus& corpus) {
  return ground_citations(answer, CitationDirectory(corpus));
}

Json to_json(const SearchHit& hit) {
  Json j;
  j["chunk_id"] = hit.chunk_id;
  j["score"] = hit.score;
  return j;
}

Json to_json(const RetrievedContext& context) {
  Json j;
  j["hits"] = Json::array();
  for (const auto& h : context.hits) {
    Json item;
    item["chunk_id"] = h.hit.chunk_id;
    item["score"] = h.hit.score;
    item["doc_id"] = h.chunk.doc_id;
    item["citation_key"] = h.chunk.citation_key;
    item["paragraph_span"] = {h.chunk.first_paragraph, h.chunk.last_paragraph};
    item["token_estimate"] = h.chunk.token_estimate;
    item["text"] = h.chunk.text;
    j["hits"].push_back(std::move(item));
  }
  j["total_token_estimate"] = context.total_token_estimate;
  return j;
}

Json to_json(const CitationReport& report) {
  Json j;
  j["detected"] = report.detected;
  j["grounded"] = report.grounded;
  j["grounded_doc_ids"] = report.grounded_doc_ids;
  j["ungrounded"] = report.ungrounded;
  return j;
}

Json to_json(const ChatTurn& turn) {
  Json j;
  j["index"] = turn.index;
  j["user_query"] = turn.user_query;
  j["standalone_question"] = turn.standalone_question;
  j["retrieved"] = to_json(turn.retrieved);
  j["answer"] = turn.answer;
  j["citation_report"] = to_json(turn.citation_report);
  return j;
}

std::string to_jsonl(const std::vector<ChatTurn>& turns) {
  std::string out;
  for (const auto& t : turns) {
    out += to_json(t).dump();
    out += '\n';
  }
  return out;
}

std::vector<ChatMessage> condensation_messages(const std::vector<ChatTurn>& history,
                                               std::string_view query,
                                               const TokenBudget& budget) {
  const std::string system(prompts::kCondense);
  for (std::size_t first = 0; first <= history.size(); ++first) {
    std::vector<ChatMessage> messages{{Role::kSystem, system},
                                      {Role::kUser, history_text(history, first, query)}};
    if (estimate_request_tokens(messages) <= budget.prompt_limit()) return messages;
  }
  throw Error(ErrorCode::kBudgetExceeded, "follow-up question alone exceeds the token budget");
}

std::string condense_question(const std::vector<ChatTurn>& history, std::string_view query,
                              ChatBackend& backend, const TokenBudget& budget) {
  if (trim(query).empty()) throw Error(ErrorCode::kEmptyInput, "query is empty");
  if (history.empty()) return std::string(query);
  auto reply = trim(complete_chat(condensation_messages(history, query, budget), backend, budget));
  if (reply.empty()) throw Error(ErrorCode::kEmptyReply, "condensation returned no question");
  return reply;
}

std::string format_context_block(const Chunk& chunk) {
  return "[" + chunk.citation_key + "]\n" + chunk.text;
}

std::size_t context_block_cost(const Chunk& chunk) {
  // separator plus block, plus one for rounding when concatenated
  return estimate_tokens(std::string(kBlockSeparator) + format_context_block(chunk)) + 1;
}

std::size_t context_budget(std::string_view question, const TokenBudget& budget) {
  const std::size_t fixed = estimate_tokens(prompts::kSystem) +
                            estimate_tokens(prompts::kContextHeader) +
                            estimate_tokens(question_text(question)) + 1;
  if (fixed >= budget.prompt_limit()) {
    throw Error(ErrorCode::kBudgetExceeded, "question leaves no room for context");
  }
  return budget.prompt_limit() - fixed;
}

RetrievedContext retrieve_context(const std::string& question, Embedder& embedder,
                                  const VectorIndex& index, const ChunkStore& chunks,
                                  std::size_t k, std::size_t budget_remaining) {
  if (index.empty()) throw Error(ErrorCode::kEmptyIndex, "no documents are indexed");
  const auto query = embedder.embed_one(question);
  const auto hits = index.search(query, k);

  RetrievedContext context;
  for (const auto& hit : hits) {
    auto it = chunks.find(hit.chunk_id);
    if (it == chunks.end()) {
      throw Error(ErrorCode::kNotFound, "indexed chunk '" + hit.chunk_id + "' has no text");
    }
    context.hits.push_back({hit, it->second});
    context.total_token_estimate += context_block_cost(it->second);
  }
  while (!context.hits.empty() && context.total_token_estimate > budget_remaining) {
    context.total_token_estimate -= context_block_cost(context.hits.back().chunk);
    context.hits.pop_back();
  }
  if (context.hits.empty()) {
    throw Error(ErrorCode::kContextOverflow,
                "best matching chunk needs more than the " + std::to_string(budget_remaining) +
                    " tokens available for context");
  }
  return context;
}

std::vector<ChatMessage> assemble_prompt(const RetrievedContext& context,
                                         std::string_view question,
                                         const TokenBudget& budget) {
  if (context.hits.empty()) throw Error(ErrorCode::kInvalidArgument, "context is empty");
  std::string user(prompts::kContextHeader);
  for (const auto& h : context.hits) {
    user += kBlockSeparator;
    user += format_context_block(h.chunk);
  }
  user += question_text(question);
  std::vector<ChatMessage> messages{{Role::kSystem, std::string(prompts::kSystem)},
                                    {Role::kUser, std::move(user)}};
  if (estimate_request_tokens(messages) > budget.prompt_limit()) {
    throw Error(ErrorCode::kBudgetExceeded,
                "assembled prompt exceeds the budget; retrieval did not respect its limit");
  }
  return messages;
}

ChatTurn run_turn(ChatSession& session, const std::string& query, TurnPipeline& pipeline) {
  InFlightGuard guard(session.in_flight_);
  if (trim(query).empty()) throw Error(ErrorCode::kEmptyInput, "query is empty");
  const auto& budget = session.config_.budget;

  ChatTurn turn;
  turn.index = session.turns_.size();
  turn.user_query = query;
  turn.standalone_question = in_stage("condense", [&] {
    return condense_question(session.turns_, query, pipeline.chat, budget);
  });
  turn.retrieved = in_stage("retrieve", [&] {
    return retrieve_context(turn.standalone_question, pipeline.embedder, pipeline.index,
                            pipeline.chunks, session.config_.k_retrieve,
                            context_budget(turn.standalone_question, budget));
  });
  const auto messages = in_stage(
      "assemble", [&] { return assemble_prompt(turn.retrieved, turn.standalone_question, budget); });
  turn.answer = in_stage("generate", [&] { return complete_chat(messages, pipeline.chat, budget); });
  if (trim(turn.answer).empty()) {
    throw Error(ErrorCode::kEmptyReply, "answering model returned nothing").with_stage("generate");
  }
  turn.citation_report = in_stage("ground", [&] { return ground_citations(turn.answer, pipeline.citations); });

  session.turns_.push_back(turn);
  return turn;
}

}  // namespace papertalk
