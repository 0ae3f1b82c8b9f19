#pragma once

#include <atomic>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "papertalk/citation.hpp"
#include "papertalk/corpus.hpp"
#include "papertalk/embed.hpp"
#include "papertalk/json.hpp"
#include "papertalk/llm.hpp"
#include "papertalk/vindex.hpp"

namespace papertalk {

using ChunkStore = std::map<std::string, Chunk, std::less<>>;

struct RetrievedHit {
  SearchHit hit;
  Chunk chunk;
};

struct RetrievedContext {
  std::vector<RetrievedHit> hits;  // ranking order
  // Sum of context_block_cost over hits; never above the budget it was cut to.
  std::size_t total_token_estimate = 0;
};

struct CitationReport {
  // Every grammar match in the answer, in order (repeats included).
  std::vector<std::string> detected;
  std::vector<std::string> grounded;
  std::vector<std::string> grounded_doc_ids;  // parallel to grounded
  std::vector<std::string> ungrounded;
};

// Maps normalized citation keys to the corpus document they name.
class CitationDirectory {
 public:
  CitationDirectory() = default;
  explicit CitationDirectory(const Corpus& corpus);

  void add(std::string_view citation_key, std::string doc_id);
  /// doc_id or nullptr.
  const std::string* lookup(const CitationKey& key) const;
  std::size_t size() const { return by_key_.size(); }

 private:
  std::map<std::string, std::string, std::less<>> by_key_;
};

/// Partitions every citation-key match into grounded (present in the
/// directory: case-insensitive surnames, exact form and year) or ungrounded.
CitationReport ground_citations(std::string_view answer, const CitationDirectory& directory);
CitationReport ground_citations(std::string_view answer, const Corpus& corpus);

struct ChatTurn {
  std::size_t index = 0;
  std::string user_query;
  std::string standalone_question;
  RetrievedContext retrieved;
  std::string answer;
  CitationReport citation_report;
};

Json to_json(const SearchHit& hit);
Json to_json(const RetrievedContext& context);
Json to_json(const CitationReport& report);
Json to_json(const ChatTurn& turn);

/// One compact JSON object per line, fixed field order.
std::string to_jsonl(const std::vector<ChatTurn>& turns);

struct ChatConfig {
  std::size_t k_retrieve = 4;
  TokenBudget budget;
};

// Everything one turn reads.
struct TurnPipeline {
  ChatBackend& chat;
  Embedder& embedder;
  const VectorIndex& index;
  const ChunkStore& chunks;
  const CitationDirectory& citations;
};

class ChatSession {
 public:
  explicit ChatSession(std::string session_id, ChatConfig config = {})
      : session_id_(std::move(session_id)), config_(config) {}
  ChatSession(const ChatSession&) = delete;
  ChatSession& operator=(const ChatSession&) = delete;

  const std::string& session_id() const { return session_id_; }
  const ChatConfig& config() const { return config_; }
  const std::vector<ChatTurn>& turns() const { return turns_; }

 private:
  friend ChatTurn run_turn(ChatSession&, const std::string&, TurnPipeline&);

  std::string session_id_;
  ChatConfig config_;
  std::vector<ChatTurn> turns_;
  std::atomic<bool> in_flight_{false};
};

/// Condensation request: instruction as system message; the history as
/// "Human:"/"Assistant:" lines (oldest turns dropped until the request fits
/// the budget) followed by the follow-up.
std::vector<ChatMessage> condensation_messages(const std::vector<ChatTurn>& history,
                                               std::string_view query,
                                               const TokenBudget& budget = {});

/// Empty history: the query itself, no backend call.
std::string condense_question(const std::vector<ChatTurn>& history, std::string_view query,
                              ChatBackend& backend, const TokenBudget& budget = {});

/// "[Citation Key]\n<chunk text>"
std::string format_context_block(const Chunk& chunk);

/// Upper bound on what one block adds to the answering request.
std::size_t context_block_cost(const Chunk& chunk);

/// Tokens left for context blocks once the system prompt, framing and the
/// question are accounted for. Throws kBudgetExceeded when nothing is left.
std::size_t context_budget(std::string_view question, const TokenBudget& budget);

/// Embeds the question, takes the exact top-k, then drops the lowest-ranked
/// hits until their block costs fit `budget_remaining`. Throws kEmptyIndex,
/// kContextOverflow when even the best hit does not fit.
RetrievedContext retrieve_context(const std::string& question, Embedder& embedder,
                                  const VectorIndex& index, const ChunkStore& chunks,
                                  std::size_t k, std::size_t budget_remaining);

/// [system prompt, user: context blocks then the question].
std::vector<ChatMessage> assemble_prompt(const RetrievedContext& context,
                                         std::string_view question,
                                         const TokenBudget& budget = {});

/// condense -> retrieve -> assemble -> generate -> ground. The finished turn
/// is appended; on any error nothing is appended and the error carries the
/// failing stage. Throws kSessionBusy when another turn is in flight.
ChatTurn run_turn(ChatSession& session, const std::string& query, TurnPipeline& pipeline);

}  // namespace papertalk
