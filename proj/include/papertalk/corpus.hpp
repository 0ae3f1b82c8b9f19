#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace papertalk {

enum class SourceKind { kRaw, kDistilled };

std::string_view source_kind_name(SourceKind kind);
SourceKind parse_source_kind(std::string_view name);

/// ceil(code points / 4). A coarse stand-in for a model tokenizer that keeps
/// every budget computation reproducible offline.
std::size_t estimate_tokens(std::string_view text);

/// Number of maximal runs of non-whitespace characters.
std::size_t word_count(std::string_view text);

/// Blank-line separated blocks of `text`, each trimmed, blanks dropped.
std::vector<std::string> split_paragraphs(std::string_view text);

std::string trim(std::string_view text);

struct Paragraph {
  std::size_t index = 0;
  std::string text;
  std::size_t word_count = 0;
  std::size_t token_estimate = 0;
};

Paragraph make_paragraph(std::size_t index, std::string text);

// Immutable once built; share freely between readers.
struct Document {
  std::string doc_id;
  std::string citation_key;
  std::string title;
  std::vector<Paragraph> paragraphs;
  SourceKind source_kind = SourceKind::kRaw;
  // For distilled documents, the raw document they were produced from.
  std::string source_doc_id;

  std::size_t total_words() const;
  // Paragraph texts joined by one blank line.
  std::string body() const;
};

/// Deterministic identifier derived from the citation key, e.g.
/// "Kawata et al. (2018)" -> "kawata-et-al-2018".
std::string doc_id_for(std::string_view citation_key);

/// Splits `raw` into paragraphs. Throws kEmptyInput or kMalformedCitationKey.
Document ingest_text(std::string_view raw, std::string_view citation_key,
                     std::string_view title);

/// Builds a document from already-segmented paragraphs (used for distilled
/// output). Throws kEmptyInput when nothing non-blank remains.
Document make_document(std::string doc_id, std::string citation_key, std::string title,
                       const std::vector<std::string>& paragraphs, SourceKind kind);

// A set of papers. Each paper has one raw document and at most one distilled
// counterpart sharing its citation key; doc_id and citation_key are unique
// across papers.
class Corpus {
 public:
  struct Entry {
    Document raw;
    std::optional<Document> distilled;

    // The version that gets indexed: distilled when available.
    const Document& preferred() const { return distilled ? *distilled : raw; }
  };

  /// Throws kDuplicateDocument on a doc_id or citation_key clash.
  const Document& add(Document raw);
  /// Attaches (or replaces) the distilled form of an existing raw document.
  void set_distilled(const std::string& raw_doc_id, Document distilled);

  /// Looks up raw or distilled documents by doc_id. nullptr when absent.
  const Document* find(std::string_view doc_id) const;
  const Entry* find_entry(std::string_view raw_doc_id) const;

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  // Entries in ascending raw doc_id order.
  const std::map<std::string, Entry, std::less<>>& entries() const { return entries_; }

  /// Every document, raw and distilled, in doc_id order.
  std::vector<const Document*> all_documents() const;
  /// Preferred form of every paper.
  std::vector<const Document*> preferred_documents() const;

  void save(const std::filesystem::path& dir) const;
  static Corpus load(const std::filesystem::path& dir);

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

/// Writes `doc` as <dir>/<doc_id>.txt plus a <doc_id>.json sidecar.
void save_document(const Document& doc, const std::filesystem::path& dir);
Document load_document(const std::filesystem::path& sidecar);

}  // namespace papertalk
