#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "papertalk/chat.hpp"
#include "papertalk/config.hpp"
#include "papertalk/corpus.hpp"
#include "papertalk/distill.hpp"
#include "papertalk/embed.hpp"
#include "papertalk/llm.hpp"
#include "papertalk/vindex.hpp"

namespace papertalk {

struct Backends {
  std::shared_ptr<ChatBackend> chat;
  std::shared_ptr<EmbeddingBackend> embedding;
};

/// Mock mode: a MockChatBackend answering through offline_responder() plus a
/// MockEmbeddingBackend. Otherwise the HTTP clients.
Backends make_backends(const BackendConfig& config);

struct DocumentSummary {
  std::string doc_id;
  std::string citation_key;
  std::string title;
  SourceKind source_kind = SourceKind::kRaw;
};

Json to_json(const DocumentSummary& summary);
Json transcript_json(const std::string& session_id, const std::vector<ChatTurn>& turns);

// The whole pipeline behind one object: corpus, index, sessions. Every CLI
// subcommand and HTTP handler is a single call on this class.
//
// On-disk layout under the workspace root (when persistent):
//   corpus/<doc_id>.txt + corpus/<doc_id>.json
//   index.pcix    vector index
//   chunks.jsonl  chunk text and provenance, one per line
class Workspace {
 public:
  /// Loads any existing state under config.workspace when `persistent`.
  Workspace(Config config, Backends backends, bool persistent = true);

  const Config& config() const { return config_; }
  bool mock_mode() const { return config_.backend.mock_mode; }
  Backends& backends() { return backends_; }

  std::string add_document(std::string_view text, std::string_view citation_key,
                           std::string_view title);
  std::vector<DocumentSummary> list_documents() const;
  std::optional<Document> document(std::string_view doc_id) const;

  /// Distills a raw document; an accepted result replaces its distilled form.
  DistillationReport distill(const std::string& doc_id,
                             std::optional<double> target_ratio = std::nullopt);

  /// Re-chunks the preferred form of every paper and rebuilds the index.
  /// Returns the number of chunks indexed. Throws kEmptyCorpus.
  std::size_t rebuild_index();
  std::size_t indexed_chunks() const;
  /// Copy of the current index.
  VectorIndex index_snapshot() const;

  std::string create_session();
  ChatTurn post_message(const std::string& session_id, const std::string& query);
  std::vector<ChatTurn> transcript(const std::string& session_id) const;

  /// One-shot question on a throwaway session.
  ChatTurn ask(const std::string& question, std::optional<std::size_t> k = std::nullopt);

 private:
  struct IndexState {
    VectorIndex index;
    ChunkStore chunks;
  };
  struct SessionSlot {
    explicit SessionSlot(std::string id, ChatConfig config) : session(std::move(id), config) {}
    ChatSession session;
    mutable std::mutex mu;
  };

  std::shared_ptr<const IndexState> current_index() const;
  ChatTurn run_on(ChatSession& session, const std::string& query);

  Config config_;
  Backends backends_;
  bool persistent_;
  std::unique_ptr<Embedder> embedder_;

  mutable std::shared_mutex corpus_mu_;
  Corpus corpus_;

  mutable std::mutex index_mu_;
  std::shared_ptr<const IndexState> index_;

  mutable std::mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<SessionSlot>> sessions_;
  std::size_t next_session_ = 1;
};

}  // namespace papertalk
