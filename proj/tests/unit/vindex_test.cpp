#include <algorithm>
#include <fstream>

#include <gtest/gtest.h>

#include "papertalk/error.hpp"
#include "papertalk/vindex.hpp"
#include "test_util.hpp"

namespace papertalk {
namespace {

using testing::random_unit;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIoError;
}

EmbeddingVector basis(std::size_t d, std::size_t i) {
  EmbeddingVector v;
  v.values.assign(d, 0.0);
  v.values[i] = 1.0;
  return v;
}

// Test-side reference ranking, written without the library's helpers.
std::vector<std::pair<std::string, double>> oracle_topk(const VectorIndex& index,
                                                        const std::vector<double>& q, std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  for (const auto& e : index.entries()) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += e.values[i] * q[i];
    all.emplace_back(e.chunk_id, s);
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

VectorIndex random_index(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VectorIndex index(d);
  std::vector<std::pair<std::string, EmbeddingVector>> items;
  for (std::size_t i = 0; i < n; ++i) items.emplace_back("c" + std::to_string(i), random_unit(rng, d));
  index.add(items);
  return index;
}

TEST(VectorIndex, AddAndSize) {
  VectorIndex index(4);
  EXPECT_TRUE(index.empty());
  index.add("a", basis(4, 0));
  index.add("b", basis(4, 1));
  index.add("c", basis(4, 2));
  EXPECT_EQ(index.size(), 3u);
}

TEST(VectorIndex, AddRejectsBadInputAtomically) {
  VectorIndex index(4);
  index.add("a", basis(4, 0));
  EXPECT_EQ(code_of([&] { index.add("a", basis(4, 1)); }), ErrorCode::kDuplicateChunkId);
  EXPECT_EQ(code_of([&] { index.add("x", basis(5, 1)); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { index.add("y", EmbeddingVector{{0.5, 0, 0, 0}, ""}); }),
            ErrorCode::kInvalidArgument);

  std::vector<std::pair<std::string, EmbeddingVector>> batch = {{"b", basis(4, 1)}, {"b", basis(4, 2)}};
  EXPECT_EQ(code_of([&] { index.add(batch); }), ErrorCode::kDuplicateChunkId);
  batch = {{"b", basis(4, 1)}, {"c", basis(3, 2)}};
  EXPECT_EQ(code_of([&] { index.add(batch); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(index.size(), 1u);
}

TEST(VectorIndex, SearchErrors) {
  VectorIndex index(4);
  EXPECT_EQ(code_of([&] { index.search(basis(4, 0), 1); }), ErrorCode::kEmptyIndex);
  index.add("a", basis(4, 0));
  EXPECT_EQ(code_of([&] { index.search(basis(4, 0), 0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { index.search(basis(3, 0), 1); }), ErrorCode::kDimensionMismatch);
}

TEST(VectorIndex, EveryStoredVectorIsItsOwnTopHit) {
  auto index = random_index(1000, 64, 1);
  for (const auto& e : index.entries()) {
    auto hits = index.search(std::span<const double>(e.values), 1);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].chunk_id, e.chunk_id);
    EXPECT_NEAR(hits[0].score, 1.0, 1e-9);
  }
}

TEST(VectorIndex, OrthogonalVectorsScoreZero) {
  VectorIndex index(8);
  for (std::size_t i = 0; i < 8; ++i) index.add("e" + std::to_string(i), basis(8, i));
  auto hits = index.search(basis(8, 3), 8);
  ASSERT_EQ(hits.size(), 8u);
  EXPECT_EQ(hits[0].chunk_id, "e3");
  EXPECT_EQ(hits[0].score, 1.0);
  for (std::size_t i = 1; i < hits.size(); ++i) EXPECT_EQ(hits[i].score, 0.0);
  // zero-score ties break by id
  EXPECT_EQ(hits[1].chunk_id, "e0");
  EXPECT_EQ(hits[7].chunk_id, "e7");
}

TEST(VectorIndex, AgreesWithOracleAndBruteForce) {
  auto index = random_index(1000, 64, 2);
  const auto entries = index.entries();
  std::mt19937_64 rng(99);
  for (int q = 0; q < 50; ++q) {
    const auto query = random_unit(rng, 64);
    for (std::size_t k : {1u, 5u, 10u, 1000u}) {
      const auto hits = index.search(query, k);
      const auto brute = brute_force_topk(entries, query.values, k);
      const auto oracle = oracle_topk(index, query.values, k);
      ASSERT_EQ(hits.size(), oracle.size());
      EXPECT_EQ(hits, brute);
      for (std::size_t i = 0; i < hits.size(); ++i) {
        EXPECT_EQ(hits[i].chunk_id, oracle[i].first);
        EXPECT_NEAR(hits[i].score, oracle[i].second, 1e-9);
      }
    }
  }
}

TEST(VectorIndex, ResultsAreSortedBoundedAndClamped) {
  auto index = random_index(30, 16, 3);
  std::mt19937_64 rng(4);
  for (int q = 0; q < 100; ++q) {
    auto hits = index.search(random_unit(rng, 16), 50);
    ASSERT_EQ(hits.size(), 30u);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_LE(hits[i].score, 1.0 + 1e-9);
      EXPECT_GE(hits[i].score, -1.0 - 1e-9);
      if (i) EXPECT_TRUE(ranks_before(hits[i - 1], hits[i]));
    }
  }
  VectorIndex single(4);
  single.add("only", basis(4, 2));
  EXPECT_EQ(single.search(basis(4, 0), 10).size(), 1u);
}

TEST(VectorIndex, TopKIsPrefixOfLargerK) {
  auto index = random_index(200, 32, 5);
  std::mt19937_64 rng(6);
  for (int q = 0; q < 20; ++q) {
    const auto query = random_unit(rng, 32);
    const auto big = index.search(query, 20);
    for (std::size_t k = 1; k < 20; ++k) {
      const auto small = index.search(query, k);
      EXPECT_TRUE(std::equal(small.begin(), small.end(), big.begin()));
    }
  }
}

TEST(VectorIndex, TiesBreakByChunkId) {
  VectorIndex index(4);
  index.add("zeta", basis(4, 0));
  index.add("alpha", basis(4, 0));
  index.add("mid", basis(4, 0));
  auto hits = index.search(basis(4, 0), 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].chunk_id, "alpha");
  EXPECT_EQ(hits[1].chunk_id, "mid");
}

TEST(VectorIndex, SaveLoadRoundTrip) {
  VectorIndex empty(8);
  EXPECT_EQ(VectorIndex::load(empty.save()), empty);

  auto index = random_index(1000, 64, 7);
  const auto bytes = index.save();
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "PCIX1");
  auto loaded = VectorIndex::load(bytes);
  EXPECT_EQ(loaded, index);
  EXPECT_EQ(loaded.save(), bytes);
  std::mt19937_64 rng(8);
  const auto q = random_unit(rng, 64);
  EXPECT_EQ(loaded.search(q, 10), index.search(q, 10));
}

TEST(VectorIndex, CorruptionIsDetected) {
  auto index = random_index(20, 8, 9);
  auto bytes = index.save();

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_EQ(code_of([&] { VectorIndex::load(truncated); }), ErrorCode::kCorruptIndex) << cut;
  }
  auto flipped = bytes;
  flipped.back() ^= 0x01;
  EXPECT_EQ(code_of([&] { VectorIndex::load(flipped); }), ErrorCode::kCorruptIndex);
  auto payload = bytes;
  payload[40] ^= 0x80;
  EXPECT_EQ(code_of([&] { VectorIndex::load(payload); }), ErrorCode::kCorruptIndex);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(code_of([&] { VectorIndex::load(magic); }), ErrorCode::kCorruptIndex);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(code_of([&] { VectorIndex::load(trailing); }), ErrorCode::kCorruptIndex);
}

TEST(VectorIndex, FileRoundTrip) {
  testing::TempDir dir;
  auto index = random_index(50, 16, 10);
  const auto path = dir.path() / "index.pcix";
  index.save_file(path);
  EXPECT_EQ(VectorIndex::load_file(path), index);
  EXPECT_THROW(VectorIndex::load_file(dir.path() / "missing.pcix"), Error);
}

TEST(MakeChunks, OneChunkPerParagraphByDefault) {
  auto doc = ingest_text("alpha beta\n\ngamma\n\ndelta epsilon zeta", "Helmi et al. (2018)", "t");
  auto chunks = make_chunks(doc);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].chunk_id, "helmi-et-al-2018#p0000-0000");
  EXPECT_EQ(chunks[2].text, "delta epsilon zeta");
  EXPECT_EQ(chunks[1].citation_key, "Helmi et al. (2018)");
  EXPECT_EQ(chunks[2].token_estimate, estimate_tokens("delta epsilon zeta"));
}

TEST(MakeChunks, MergesUnderTokenCap) {
  // Each paragraph is 8 characters (2 tokens); two merged are 18 characters (5 tokens).
  auto doc = ingest_text("aaaaaaaa\n\nbbbbbbbb\n\ncccccccc", "Helmi et al. (2018)", "t");
  ChunkingConfig config;
  config.merge_token_cap = 5;
  auto chunks = make_chunks(doc, config);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0].chunk_id, "helmi-et-al-2018#p0000-0001");
  EXPECT_EQ(chunks[0].text, "aaaaaaaa\n\nbbbbbbbb");
  EXPECT_EQ(chunks[1].first_paragraph, 2u);
  for (const auto& c : chunks) EXPECT_LE(c.token_estimate, 5u);
}

TEST(MakeChunks, CoverEveryParagraphExactlyOnce) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> words(1, 80), cap(0, 200);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> sizes(1 + trial % 9);
    for (auto& s : sizes) s = words(rng);
    auto doc = ingest_text(testing::synthetic_text(rng, sizes), "Helmi et al. (2018)", "t");
    ChunkingConfig config;
    config.merge_token_cap = cap(rng);
    std::size_t next = 0;
    for (const auto& c : make_chunks(doc, config)) {
      EXPECT_EQ(c.first_paragraph, next);
      EXPECT_LE(c.first_paragraph, c.last_paragraph);
      next = c.last_paragraph + 1;
    }
    EXPECT_EQ(next, doc.paragraphs.size());
  }
}

}  // namespace
}  // namespace papertalk
