#include "papertalk/embed.hpp"

#include <cmath>
#include <cstdint>
#include <mutex>

#include "papertalk/error.hpp"

namespace papertalk {
namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = kFnvOffset;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

void update_max(std::atomic<std::size_t>& target, std::size_t value) {
  auto current = target.load();
  while (value > current && !target.compare_exchange_weak(current, value)) {
  }
}

}  // namespace

double inner_product(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double l2_norm(std::span<const double> v) { return std::sqrt(inner_product(v, v)); }

EmbeddingVector normalize_vector(const EmbeddingVector& v) {
  for (double x : v.values) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "vector has non-finite values");
  }
  const double norm = l2_norm(v.values);
  if (norm == 0.0) throw Error(ErrorCode::kZeroVector, "cannot normalize a zero vector");
  EmbeddingVector out{v.values, v.model_id};
  for (auto& x : out.values) x /= norm;
  return out;
}

std::string mock_model_id(std::size_t dimension) {
  return "mock-trigram-" + std::to_string(dimension);
}

EmbeddingVector mock_embed(std::string_view text, std::size_t dimension) {
  if (dimension < 2) throw Error(ErrorCode::kInvalidArgument, "mock_embed needs dimension >= 2");
  std::string lowered(text);
  for (auto& c : lowered) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }

  EmbeddingVector v{std::vector<double>(dimension, 0.0), mock_model_id(dimension)};
  auto add_gram = [&](std::string_view gram) {
    const auto h = fnv1a(gram);
    v.values[h % dimension] += ((h >> 32) & 1U) ? -1.0 : 1.0;
  };
  if (!lowered.empty() && lowered.size() < 3) {
    add_gram(lowered);
  } else {
    for (std::size_t i = 0; i + 3 <= lowered.size(); ++i) {
      add_gram(std::string_view(lowered).substr(i, 3));
    }
  }

  if (l2_norm(v.values) == 0.0) {
    std::fill(v.values.begin(), v.values.end(), 0.0);
    v.values[0] = 1.0;
    return v;
  }
  return normalize_vector(v);
}

std::vector<std::vector<double>> MockEmbeddingBackend::embed_batch(
    std::span<const std::string> texts) {
  ++calls_;
  texts_ += texts.size();
  update_max(largest_batch_, texts.size());
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto values = mock_embed(t, dimension_).values;
    if (reported_dimension_ != 0) values.resize(reported_dimension_, 0.5);
    out.push_back(std::move(values));
  }
  return out;
}

std::string EmbeddingCache::key(std::string_view model_id, std::string_view text) {
  std::string k;
  k.reserve(model_id.size() + 1 + text.size());
  k.append(model_id).push_back('\0');
  k.append(text);
  return k;
}

const EmbeddingVector* EmbeddingCache::find(std::string_view model_id,
                                            std::string_view text) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key(model_id, text));
  return it == entries_.end() ? nullptr : &it->second;
}

void EmbeddingCache::insert(std::string_view model_id, std::string_view text, EmbeddingVector v) {
  std::unique_lock lock(mu_);
  entries_.insert_or_assign(key(model_id, text), std::move(v));
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                         EmbeddingBackend& backend, EmbeddingCache& cache,
                                         std::size_t batch_size) {
  if (texts.empty()) throw Error(ErrorCode::kInvalidArgument, "embed_texts needs at least one text");
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  for (const auto& t : texts) {
    if (t.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot embed an empty text");
  }
  const auto model = backend.model_id();

  // unique cache misses, first-appearance order
  std::vector<std::string> misses;
  std::unordered_map<std::string_view, bool> queued;
  for (const auto& t : texts) {
    if (cache.find(model, t) == nullptr && queued.emplace(t, true).second) misses.push_back(t);
  }

  std::size_t expected_dim = backend.expected_dimension();
  for (std::size_t begin = 0; begin < misses.size(); begin += batch_size) {
    const auto count = std::min(batch_size, misses.size() - begin);
    std::span<const std::string> batch(misses.data() + begin, count);
    auto raw = backend.embed_batch(batch);
    if (raw.size() != count) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "backend returned " + std::to_string(raw.size()) + " vectors for " +
                      std::to_string(count) + " inputs");
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (expected_dim == 0) expected_dim = raw[i].size();
      if (raw[i].empty() || raw[i].size() != expected_dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "backend returned a vector of length " + std::to_string(raw[i].size()) +
                        ", expected " + std::to_string(expected_dim));
      }
      cache.insert(model, batch[i], normalize_vector({std::move(raw[i]), model}));
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const auto* hit = cache.find(model, t);
    out.push_back(*hit);
    if (out.size() > 1 && out.back().dimension() != out.front().dimension()) {
      throw Error(ErrorCode::kDimensionMismatch, "cached vectors disagree in dimension");
    }
  }
  return out;
}

std::vector<EmbeddingVector> Embedder::embed(std::span<const std::string> texts) {
  return embed_texts(texts, *backend_, cache_, batch_size_);
}

EmbeddingVector Embedder::embed_one(const std::string& text) {
  return embed(std::span<const std::string>(&text, 1)).front();
}

}  // namespace papertalk
