#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "papertalk/corpus.hpp"
#include "papertalk/embed.hpp"

namespace papertalk {

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::string citation_key;
  std::size_t first_paragraph = 0;  // inclusive span within the parent document
  std::size_t last_paragraph = 0;
  std::string text;
  std::size_t token_estimate = 0;

  bool operator==(const Chunk&) const = default;
};

struct ChunkingConfig {
  // 0: one chunk per paragraph. Otherwise consecutive paragraphs merge while
  // the merged text stays within this many estimated tokens.
  std::size_t merge_token_cap = 0;
};

/// "<doc_id>#p0003-0004"; zero padding keeps lexical and paragraph order equal.
std::string make_chunk_id(std::string_view doc_id, std::size_t first, std::size_t last);

std::vector<Chunk> make_chunks(const Document& doc, const ChunkingConfig& config = {});

struct SearchHit {
  std::string chunk_id;
  double score = 0.0;

  bool operator==(const SearchHit&) const = default;
};

/// Ranking order: score descending, then chunk_id ascending.
bool ranks_before(const SearchHit& a, const SearchHit& b);

struct IndexEntry {
  std::string chunk_id;
  std::vector<double> values;
};

/// Reference top-k: scores every entry, fully sorts, truncates.
std::vector<SearchHit> brute_force_topk(std::span<const IndexEntry> entries,
                                        std::span<const double> query, std::size_t k);

// Exact inner-product index over unit vectors. Searches may run concurrently;
// add and assignment take an exclusive lock, so a search never sees a
// partially added batch.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dimension = 64);
  VectorIndex(const VectorIndex& other);
  VectorIndex& operator=(const VectorIndex& other);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  /// All-or-nothing. Throws kDimensionMismatch, kDuplicateChunkId, or
  /// kInvalidArgument for vectors that are not unit norm (+-1e-6).
  void add(std::span<const std::pair<std::string, EmbeddingVector>> items);
  void add(std::string chunk_id, const EmbeddingVector& v);

  /// min(k, size) hits. Throws kEmptyIndex, kDimensionMismatch, kInvalidArgument (k == 0).
  std::vector<SearchHit> search(std::span<const double> query, std::size_t k) const;
  std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k) const {
    return search(std::span<const double>(query.values), k);
  }

  /// Snapshot of entries in insertion order.
  std::vector<IndexEntry> entries() const;

  /// PCIX1 layout, all little-endian:
  ///   "PCIX1" | u32 dimension | u64 count | count*dimension f64 |
  ///   count * (u32 length, bytes) chunk ids | u32 CRC-32 of everything before.
  std::vector<std::uint8_t> save() const;
  /// Throws kCorruptIndex on bad magic, truncation, trailing bytes, or checksum mismatch.
  static VectorIndex load(std::span<const std::uint8_t> bytes);

  void save_file(const std::filesystem::path& path) const;
  static VectorIndex load_file(const std::filesystem::path& path);

  bool operator==(const VectorIndex& other) const;

 private:
  void check_query(std::span<const double> query, std::size_t k) const;

  std::size_t dimension_;
  std::vector<std::string> ids_;
  std::vector<double> data_;  // row-major, ids_.size() x dimension_
  std::map<std::string, std::size_t, std::less<>> positions_;
  mutable std::shared_mutex mu_;
};

}  // namespace papertalk
