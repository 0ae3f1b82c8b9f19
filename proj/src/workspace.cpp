#include "papertalk/workspace.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "papertalk/http_backends.hpp"

namespace papertalk {
namespace fs = std::filesystem;

namespace {

constexpr const char* kCorpusDir = "corpus";
constexpr const char* kIndexFile = "index.pcix";
constexpr const char* kChunksFile = "chunks.jsonl";

Json chunk_json(const Chunk& c) {
  Json j;
  j["chunk_id"] = c.chunk_id;
  j["doc_id"] = c.doc_id;
  j["citation_key"] = c.citation_key;
  j["paragraph_span"] = {c.first_paragraph, c.last_paragraph};
  j["token_estimate"] = c.token_estimate;
  j["text"] = c.text;
  return j;
}

Chunk chunk_from_json(const Json& j) {
  Chunk c;
  c.chunk_id = j.at("chunk_id").get<std::string>();
  c.doc_id = j.at("doc_id").get<std::string>();
  c.citation_key = j.at("citation_key").get<std::string>();
  c.first_paragraph = j.at("paragraph_span").at(0).get<std::size_t>();
  c.last_paragraph = j.at("paragraph_span").at(1).get<std::size_t>();
  c.token_estimate = j.at("token_estimate").get<std::size_t>();
  c.text = j.at("text").get<std::string>();
  return c;
}

void write_text(const fs::path& path, const std::string& data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << data;
  }
  fs::rename(tmp, path);
}

std::string session_name(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "session-%04zu", n);
  return buf;
}

}  // namespace

Backends make_backends(const BackendConfig& config) {
  Backends b;
  if (config.mock_mode) {
    auto chat = std::make_shared<MockChatBackend>();
    chat->set_fallback(offline_responder());
    b.chat = std::move(chat);
    b.embedding = std::make_shared<MockEmbeddingBackend>(config.mock_dimension);
  } else {
    b.chat = std::make_shared<HttpChatBackend>(config);
    b.embedding = std::make_shared<HttpEmbeddingBackend>(config);
  }
  return b;
}

Json to_json(const DocumentSummary& s) {
  Json j;
  j["doc_id"] = s.doc_id;
  j["citation_key"] = s.citation_key;
  j["title"] = s.title;
  j["source_kind"] = source_kind_name(s.source_kind);
  return j;
}

Json transcript_json(const std::string& session_id, const std::vector<ChatTurn>& turns) {
  Json j;
  j["session_id"] = session_id;
  j["turns"] = Json::array();
  for (const auto& t : turns) j["turns"].push_back(to_json(t));
  return j;
}

Workspace::Workspace(Config config, Backends backends, bool persistent)
    : config_(std::move(config)), backends_(std::move(backends)), persistent_(persistent) {
  config_.validate();
  embedder_ = std::make_unique<Embedder>(backends_.embedding, config_.backend.embed_batch_size);
  if (!persistent_) return;

  corpus_ = Corpus::load(config_.workspace / kCorpusDir);
  const auto index_path = config_.workspace / kIndexFile;
  const auto chunks_path = config_.workspace / kChunksFile;
  if (fs::exists(index_path) && fs::exists(chunks_path)) {
    auto state = std::make_shared<IndexState>(IndexState{VectorIndex::load_file(index_path), {}});
    std::ifstream in(chunks_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto chunk = chunk_from_json(Json::parse(line));
      auto id = chunk.chunk_id;
      state->chunks.emplace(std::move(id), std::move(chunk));
    }
    index_ = std::move(state);
  }
}

std::string Workspace::add_document(std::string_view text, std::string_view citation_key,
                                    std::string_view title) {
  auto doc = ingest_text(text, citation_key, title);
  std::unique_lock lock(corpus_mu_);
  const auto& added = corpus_.add(std::move(doc));
  if (persistent_) save_document(added, config_.workspace / kCorpusDir);
  return added.doc_id;
}

std::vector<DocumentSummary> Workspace::list_documents() const {
  std::shared_lock lock(corpus_mu_);
  std::vector<DocumentSummary> out;
  for (const auto* d : corpus_.all_documents()) {
    out.push_back({d->doc_id, d->citation_key, d->title, d->source_kind});
  }
  return out;
}

std::optional<Document> Workspace::document(std::string_view doc_id) const {
  std::shared_lock lock(corpus_mu_);
  if (const auto* d = corpus_.find(doc_id)) return *d;
  return std::nullopt;
}

DistillationReport Workspace::distill(const std::string& doc_id,
                                      std::optional<double> target_ratio) {
  Document original;
  {
    std::shared_lock lock(corpus_mu_);
    const auto* entry = corpus_.find_entry(doc_id);
    if (entry == nullptr) {
      if (corpus_.find(doc_id) != nullptr) {
        throw Error(ErrorCode::kInvalidArgument, "'" + doc_id + "' is already a distilled document");
      }
      throw Error(ErrorCode::kNotFound, "no document '" + doc_id + "'");
    }
    original = entry->raw;
  }
  auto policy = config_.distill;
  if (target_ratio) {
    policy.target_ratio = *target_ratio;
    // keep the tolerance band valid for small targets
    if (policy.ratio_tolerance >= policy.target_ratio) policy.ratio_tolerance = policy.target_ratio / 2;
  }
  auto result = distill_document(original, policy, *backends_.chat);
  if (result.report.accepted) {
    std::unique_lock lock(corpus_mu_);
    corpus_.set_distilled(doc_id, std::move(result.distilled));
    if (persistent_) save_document(*corpus_.find_entry(doc_id)->distilled, config_.workspace / kCorpusDir);
  }
  return result.report;
}

std::size_t Workspace::rebuild_index() {
  std::vector<Chunk> chunks;
  {
    std::shared_lock lock(corpus_mu_);
    if (corpus_.empty()) throw Error(ErrorCode::kEmptyCorpus, "the corpus has no documents");
    for (const auto* doc : corpus_.preferred_documents()) {
      for (auto& c : make_chunks(*doc, config_.chunking)) chunks.push_back(std::move(c));
    }
  }
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.text);
  auto vectors = embedder_->embed(texts);

  auto state = std::make_shared<IndexState>(IndexState{VectorIndex(vectors.front().dimension()), {}});
  std::vector<std::pair<std::string, EmbeddingVector>> items;
  items.reserve(chunks.size());
  std::string chunk_lines;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    items.emplace_back(chunks[i].chunk_id, std::move(vectors[i]));
    chunk_lines += chunk_json(chunks[i]).dump() + "\n";
    auto id = chunks[i].chunk_id;
    state->chunks.emplace(std::move(id), std::move(chunks[i]));
  }
  state->index.add(items);

  if (persistent_) {
    fs::create_directories(config_.workspace);
    state->index.save_file(config_.workspace / kIndexFile);
    write_text(config_.workspace / kChunksFile, chunk_lines);
  }
  const auto count = state->index.size();
  std::lock_guard lock(index_mu_);
  index_ = std::move(state);
  return count;
}

std::shared_ptr<const Workspace::IndexState> Workspace::current_index() const {
  std::lock_guard lock(index_mu_);
  return index_;
}

std::size_t Workspace::indexed_chunks() const {
  auto state = current_index();
  return state ? state->index.size() : 0;
}

VectorIndex Workspace::index_snapshot() const {
  auto state = current_index();
  if (!state) throw Error(ErrorCode::kEmptyIndex, "no index has been built");
  return state->index;
}

std::string Workspace::create_session() {
  std::lock_guard lock(sessions_mu_);
  auto id = session_name(next_session_++);
  sessions_.emplace(id, std::make_unique<SessionSlot>(id, config_.chat));
  return id;
}

ChatTurn Workspace::run_on(ChatSession& session, const std::string& query) {
  auto state = current_index();
  if (!state) {
    std::shared_lock lock(corpus_mu_);
    if (corpus_.empty()) {
      throw Error(ErrorCode::kEmptyCorpus, "the corpus has no documents").with_stage("retrieve");
    }
    throw Error(ErrorCode::kEmptyIndex, "no index has been built; run an index rebuild")
        .with_stage("retrieve");
  }
  CitationDirectory citations;
  {
    std::shared_lock lock(corpus_mu_);
    citations = CitationDirectory(corpus_);
  }
  TurnPipeline pipeline{*backends_.chat, *embedder_, state->index, state->chunks, citations};
  return run_turn(session, query, pipeline);
}

ChatTurn Workspace::post_message(const std::string& session_id, const std::string& query) {
  SessionSlot* slot = nullptr;
  {
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "no session '" + session_id + "'");
    slot = it->second.get();
  }
  std::unique_lock turn_lock(slot->mu, std::try_to_lock);
  if (!turn_lock.owns_lock()) {
    throw Error(ErrorCode::kSessionBusy, "session '" + session_id + "' already has a turn in flight");
  }
  return run_on(slot->session, query);
}

std::vector<ChatTurn> Workspace::transcript(const std::string& session_id) const {
  SessionSlot* slot = nullptr;
  {
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "no session '" + session_id + "'");
    slot = it->second.get();
  }
  std::lock_guard lock(slot->mu);
  return slot->session.turns();
}

ChatTurn Workspace::ask(const std::string& question, std::optional<std::size_t> k) {
  auto chat_config = config_.chat;
  if (k) chat_config.k_retrieve = *k;
  if (chat_config.k_retrieve == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  ChatSession session("ask", chat_config);
  return run_on(session, question);
}

}  // namespace papertalk
