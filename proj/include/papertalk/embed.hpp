#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace papertalk {

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;

  std::size_t dimension() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

double inner_product(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Scales `v` to unit L2 norm. Throws kZeroVector for an all-zero input and
/// kInvalidArgument for non-finite values.
EmbeddingVector normalize_vector(const EmbeddingVector& v);

/// Offline embedder: lowercased character 3-grams hashed (FNV-1a 64) into
/// `dimension` buckets with a hash-derived sign, then normalized. Texts
/// shorter than three bytes hash as a single gram; text with no surviving
/// signal maps to the first basis vector.
EmbeddingVector mock_embed(std::string_view text, std::size_t dimension = 64);

std::string mock_model_id(std::size_t dimension);

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string model_id() const = 0;
  /// One raw vector per input, in order.
  virtual std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) = 0;
  /// Vector length the backend promises; 0 when only known from replies.
  virtual std::size_t expected_dimension() const { return 0; }
};

// Instrumented mock_embed backend; counts calls and texts.
class MockEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit MockEmbeddingBackend(std::size_t dimension = 64) : dimension_(dimension) {}

  std::string model_id() const override { return mock_model_id(dimension_); }
  std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override;
  std::size_t expected_dimension() const override { return dimension_; }

  std::size_t call_count() const { return calls_.load(); }
  std::size_t texts_embedded() const { return texts_.load(); }
  std::size_t largest_batch() const { return largest_batch_.load(); }

  // Test hook: report vectors of the wrong length.
  void set_reported_dimension(std::size_t d) { reported_dimension_ = d; }

 private:
  std::size_t dimension_;
  std::size_t reported_dimension_ = 0;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> texts_{0};
  std::atomic<std::size_t> largest_batch_{0};
};

// Normalized vectors keyed by exact (model_id, text) bytes. Concurrent
// readers, serialized writers.
class EmbeddingCache {
 public:
  const EmbeddingVector* find(std::string_view model_id, std::string_view text) const;
  void insert(std::string_view model_id, std::string_view text, EmbeddingVector v);
  std::size_t size() const;

 private:
  static std::string key(std::string_view model_id, std::string_view text);

  mutable std::shared_mutex mu_;
  // node-based map: pointers stay valid across inserts
  std::unordered_map<std::string, EmbeddingVector> entries_;
};

/// Embeds `texts` in order. Cache is consulted first; misses are deduplicated
/// by content and sent to the backend in batches of at most `batch_size`.
/// Throws kInvalidArgument on empty input, kDimensionMismatch when the
/// backend's vectors disagree in length.
std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                         EmbeddingBackend& backend, EmbeddingCache& cache,
                                         std::size_t batch_size = 16);

// Backend plus cache plus batch size, the unit the chat pipeline holds.
class Embedder {
 public:
  Embedder(std::shared_ptr<EmbeddingBackend> backend, std::size_t batch_size = 16)
      : backend_(std::move(backend)), batch_size_(batch_size) {}

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts);
  EmbeddingVector embed_one(const std::string& text);

  EmbeddingBackend& backend() { return *backend_; }
  EmbeddingCache& cache() { return cache_; }

 private:
  std::shared_ptr<EmbeddingBackend> backend_;
  EmbeddingCache cache_;
  std::size_t batch_size_;
};

}  // namespace papertalk
