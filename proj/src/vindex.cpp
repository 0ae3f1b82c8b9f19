#include "papertalk/vindex.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <mutex>
#include <queue>

#include <zlib.h>

#include "papertalk/error.hpp"

namespace papertalk {
namespace {

constexpr char kMagic[] = {'P', 'C', 'I', 'X', '1'};
constexpr double kUnitTolerance = 1e-6;

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void le(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xFF));
    }
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::kCorruptIndex, "index data is truncated");
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded pieces
  constexpr std::size_t kPiece = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kPiece) {
    const auto n = std::min(kPiece, bytes.size() - off);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

std::string pad4(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", n);
  return buf;
}

}  // namespace

std::string make_chunk_id(std::string_view doc_id, std::size_t first, std::size_t last) {
  return std::string(doc_id) + "#p" + pad4(first) + "-" + pad4(last);
}

std::vector<Chunk> make_chunks(const Document& doc, const ChunkingConfig& config) {
  std::vector<Chunk> chunks;
  auto emit = [&](std::size_t first, std::size_t last) {
    Chunk c;
    c.doc_id = doc.doc_id;
    c.citation_key = doc.citation_key;
    c.first_paragraph = first;
    c.last_paragraph = last;
    c.chunk_id = make_chunk_id(doc.doc_id, first, last);
    for (std::size_t i = first; i <= last; ++i) {
      if (i > first) c.text += "\n\n";
      c.text += doc.paragraphs[i].text;
    }
    c.token_estimate = estimate_tokens(c.text);
    chunks.push_back(std::move(c));
  };

  std::size_t first = 0;
  while (first < doc.paragraphs.size()) {
    std::size_t last = first;
    if (config.merge_token_cap != 0) {
      std::string merged = doc.paragraphs[first].text;
      while (last + 1 < doc.paragraphs.size()) {
        auto next = merged + "\n\n" + doc.paragraphs[last + 1].text;
        if (estimate_tokens(next) > config.merge_token_cap) break;
        merged = std::move(next);
        ++last;
      }
    }
    emit(first, last);
    first = last + 1;
  }
  return chunks;
}

bool ranks_before(const SearchHit& a, const SearchHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.chunk_id < b.chunk_id;
}

std::vector<SearchHit> brute_force_topk(std::span<const IndexEntry> entries,
                                        std::span<const double> query, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (entries.empty()) throw Error(ErrorCode::kEmptyIndex, "index is empty");
  std::vector<SearchHit> all;
  all.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.values.size() != query.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "query dimension does not match the index");
    }
    double score = 0.0;
    for (std::size_t i = 0; i < query.size(); ++i) score += e.values[i] * query[i];
    all.push_back({e.chunk_id, score});
  }
  std::sort(all.begin(), all.end(), ranks_before);
  all.resize(std::min(k, all.size()));
  return all;
}

VectorIndex::VectorIndex(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw Error(ErrorCode::kInvalidArgument, "index dimension must be positive");
}

VectorIndex::VectorIndex(const VectorIndex& other) {
  std::shared_lock lock(other.mu_);
  dimension_ = other.dimension_;
  ids_ = other.ids_;
  data_ = other.data_;
  positions_ = other.positions_;
}

VectorIndex& VectorIndex::operator=(const VectorIndex& other) {
  if (this == &other) return *this;
  VectorIndex copy(other);
  std::unique_lock lock(mu_);
  dimension_ = copy.dimension_;
  ids_ = std::move(copy.ids_);
  data_ = std::move(copy.data_);
  positions_ = std::move(copy.positions_);
  return *this;
}

std::size_t VectorIndex::size() const {
  std::shared_lock lock(mu_);
  return ids_.size();
}

void VectorIndex::add(std::span<const std::pair<std::string, EmbeddingVector>> items) {
  std::unique_lock lock(mu_);
  std::map<std::string_view, bool> batch_ids;
  for (const auto& [id, v] : items) {
    if (v.dimension() != dimension_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "vector for '" + id + "' has dimension " + std::to_string(v.dimension()) +
                      ", index expects " + std::to_string(dimension_));
    }
    if (std::abs(l2_norm(v.values) - 1.0) > kUnitTolerance) {
      throw Error(ErrorCode::kInvalidArgument, "vector for '" + id + "' is not unit norm");
    }
    if (positions_.count(id) != 0 || !batch_ids.emplace(id, true).second) {
      throw Error(ErrorCode::kDuplicateChunkId, "chunk id '" + id + "' is already indexed");
    }
  }
  for (const auto& [id, v] : items) {
    positions_.emplace(id, ids_.size());
    ids_.push_back(id);
    data_.insert(data_.end(), v.values.begin(), v.values.end());
  }
}

void VectorIndex::add(std::string chunk_id, const EmbeddingVector& v) {
  std::pair<std::string, EmbeddingVector> item{std::move(chunk_id), v};
  add(std::span<const std::pair<std::string, EmbeddingVector>>(&item, 1));
}

void VectorIndex::check_query(std::span<const double> query, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (ids_.empty()) throw Error(ErrorCode::kEmptyIndex, "index is empty");
  if (query.size() != dimension_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query has dimension " + std::to_string(query.size()) + ", index expects " +
                    std::to_string(dimension_));
  }
}

std::vector<SearchHit> VectorIndex::search(std::span<const double> query, std::size_t k) const {
  std::shared_lock lock(mu_);
  check_query(query, k);

  // Bounded selection: the heap top is the weakest of the current best k.
  struct Candidate {
    double score;
    std::size_t row;
  };
  auto worse_first = [this](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return ids_[a.row] < ids_[b.row];
  };
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse_first)> heap(worse_first);
  const std::size_t limit = std::min(k, ids_.size());
  for (std::size_t row = 0; row < ids_.size(); ++row) {
    const double* v = data_.data() + row * dimension_;
    double score = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) score += v[i] * query[i];
    Candidate c{score, row};
    if (heap.size() < limit) {
      heap.push(c);
    } else if (worse_first(c, heap.top())) {
      heap.pop();
      heap.push(c);
    }
  }

  std::vector<SearchHit> hits(heap.size());
  for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
    *it = {ids_[heap.top().row], heap.top().score};
    heap.pop();
  }
  return hits;
}

std::vector<IndexEntry> VectorIndex::entries() const {
  std::shared_lock lock(mu_);
  std::vector<IndexEntry> out;
  out.reserve(ids_.size());
  for (std::size_t row = 0; row < ids_.size(); ++row) {
    const auto begin = data_.begin() + static_cast<std::ptrdiff_t>(row * dimension_);
    out.push_back({ids_[row], std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(dimension_))});
  }
  return out;
}

std::vector<std::uint8_t> VectorIndex::save() const {
  std::shared_lock lock(mu_);
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.le(static_cast<std::uint32_t>(dimension_));
  w.le(static_cast<std::uint64_t>(ids_.size()));
  for (double x : data_) w.f64(x);
  for (const auto& id : ids_) {
    w.le(static_cast<std::uint32_t>(id.size()));
    w.bytes(id.data(), id.size());
  }
  const auto crc = crc32_of(w.buffer());
  w.le(crc);
  return std::move(w.buffer());
}

VectorIndex VectorIndex::load(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic + 4 + 8 + 4) {
    throw Error(ErrorCode::kCorruptIndex, "index data is truncated");
  }
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(ErrorCode::kCorruptIndex, "bad index magic");
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader trailer(bytes.last(4));
  if (trailer.le<std::uint32_t>() != crc32_of(body)) {
    throw Error(ErrorCode::kCorruptIndex, "index checksum mismatch");
  }

  Reader r(body);
  r.take(sizeof kMagic);
  const auto dimension = r.le<std::uint32_t>();
  const auto count = r.le<std::uint64_t>();
  if (dimension == 0) throw Error(ErrorCode::kCorruptIndex, "index dimension is zero");
  if (count > r.remaining() / (static_cast<std::uint64_t>(dimension) * 8)) {
    throw Error(ErrorCode::kCorruptIndex, "index data is truncated");
  }

  VectorIndex index(dimension);
  index.data_.reserve(count * dimension);
  for (std::uint64_t i = 0; i < count * dimension; ++i) index.data_.push_back(r.f64());
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.le<std::uint32_t>();
    auto raw = r.take(len);
    std::string id(raw.begin(), raw.end());
    if (!index.positions_.emplace(id, index.ids_.size()).second) {
      throw Error(ErrorCode::kCorruptIndex, "duplicate chunk id in index data");
    }
    index.ids_.push_back(std::move(id));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kCorruptIndex, "trailing bytes in index data");
  return index;
}

void VectorIndex::save_file(const std::filesystem::path& path) const {
  const auto bytes = save();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

VectorIndex VectorIndex::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "no index file at " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load(bytes);
}

bool VectorIndex::operator==(const VectorIndex& other) const {
  if (this == &other) return true;
  std::shared_lock a(mu_);
  std::shared_lock b(other.mu_);
  if (dimension_ != other.dimension_ || ids_ != other.ids_ || data_.size() != other.data_.size()) {
    return false;
  }
  // bitwise, so -0.0 != 0.0 and NaN payloads count
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(data_[i]) != std::bit_cast<std::uint64_t>(other.data_[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace papertalk
