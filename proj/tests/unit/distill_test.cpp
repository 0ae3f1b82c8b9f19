#include <algorithm>

#include <gtest/gtest.h>

#include "papertalk/distill.hpp"
#include "papertalk/error.hpp"
#include "test_util.hpp"

namespace papertalk {
namespace {

constexpr const char* kPaperInstruction =
    "Distill each paragraph of the given text, maintaining the same number of paragraphs and "
    "structure. Limit the word count to 50% of the original, and ensure references are "
    "included.";

Document doc_with_words(const std::vector<std::size_t>& sizes, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  return ingest_text(testing::synthetic_text(rng, sizes), "Kawata et al. (2018)", "t");
}

// Reply with the given number of words per paragraph, taken from the original.
std::string reply_with(const Document& doc, const std::vector<std::size_t>& keep) {
  std::string out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!out.empty()) out += "\n\n";
    out += testing::first_words(doc.paragraphs[i % doc.paragraphs.size()].text, keep[i]);
  }
  return out;
}

TEST(BuildDistillPrompt, DefaultRatioIsThePublishedInstruction) {
  auto doc = doc_with_words({10, 12});
  const auto prompt = build_distill_prompt(doc, DistillationPolicy{});
  EXPECT_EQ(prompt.rfind(kPaperInstruction, 0), 0u);
  EXPECT_EQ(distill_instruction(DistillationPolicy{}), kPaperInstruction);
}

TEST(BuildDistillPrompt, SubstitutesPercentage) {
  auto doc = doc_with_words({10});
  DistillationPolicy p;
  p.target_ratio = 0.3;
  EXPECT_NE(build_distill_prompt(doc, p).find("30% of the original"), std::string::npos);
  p.target_ratio = 0.333;
  EXPECT_NE(distill_instruction(p).find("33.3% of the original"), std::string::npos);
  EXPECT_EQ(format_percent(1.0), "100%");
  EXPECT_EQ(format_percent(0.125), "12.5%");
}

TEST(BuildDistillPrompt, TailEchoesParagraphStructure) {
  auto doc = doc_with_words({5, 7});
  const auto prompt = build_distill_prompt(doc, DistillationPolicy{});
  const auto tail = prompt.substr(distill_instruction(DistillationPolicy{}).size());
  const auto blocks = split_paragraphs(tail);
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks[0], doc.paragraphs[0].text);
  EXPECT_EQ(blocks[1], doc.paragraphs[1].text);
}

TEST(ValidateDistillation, HalfSizeIsAccepted) {
  auto original = doc_with_words({60, 40});
  auto candidate = make_document("c", "Kawata et al. (2018)", "t",
                                 {testing::first_words(original.paragraphs[0].text, 30),
                                  testing::first_words(original.paragraphs[1].text, 20)},
                                 SourceKind::kDistilled);
  auto r = validate_distillation(original, candidate, DistillationPolicy{});
  EXPECT_TRUE(r.accepted);
  EXPECT_TRUE(r.structure_preserved);
  EXPECT_DOUBLE_EQ(r.overall_ratio, 0.5);
  ASSERT_EQ(r.per_paragraph_ratios.size(), 2u);
  EXPECT_DOUBLE_EQ(r.per_paragraph_ratios[0], 0.5);
}

TEST(ValidateDistillation, IdentityIsRejected) {
  auto original = doc_with_words({60, 40});
  auto r = validate_distillation(original, original, DistillationPolicy{});
  EXPECT_FALSE(r.accepted);
  EXPECT_TRUE(r.structure_preserved);
  EXPECT_DOUBLE_EQ(r.overall_ratio, 1.0);
}

TEST(ValidateDistillation, FortyPercentIsInsideTolerance) {
  auto original = doc_with_words({50, 50});
  auto candidate = make_document("c", "", "", {testing::first_words(original.paragraphs[0].text, 20),
                                               testing::first_words(original.paragraphs[1].text, 20)},
                                 SourceKind::kDistilled);
  auto r = validate_distillation(original, candidate, DistillationPolicy{});
  EXPECT_DOUBLE_EQ(r.overall_ratio, 0.4);
  EXPECT_TRUE(r.accepted);
}

TEST(ValidateDistillation, ToleranceBoundaryIsInclusive) {
  auto original = doc_with_words({100});
  for (std::size_t words : {35u, 65u}) {
    auto candidate = make_document("c", "", "", {testing::first_words(original.paragraphs[0].text, words)},
                                   SourceKind::kDistilled);
    EXPECT_TRUE(validate_distillation(original, candidate, DistillationPolicy{}).accepted) << words;
  }
  for (std::size_t words : {34u, 66u}) {
    auto candidate = make_document("c", "", "", {testing::first_words(original.paragraphs[0].text, words)},
                                   SourceKind::kDistilled);
    EXPECT_FALSE(validate_distillation(original, candidate, DistillationPolicy{}).accepted) << words;
  }
}

TEST(ValidateDistillation, ParagraphCountMismatch) {
  auto original = doc_with_words({20, 20, 20});
  auto candidate = make_document("c", "", "", {"a b c d e f g h i j", "k l m n o p q r s t u v w x y z a b c d e f g h i j k l m n"},
                                 SourceKind::kDistilled);
  auto r = validate_distillation(original, candidate, DistillationPolicy{});
  EXPECT_FALSE(r.structure_preserved);
  EXPECT_FALSE(r.accepted);
  EXPECT_TRUE(r.per_paragraph_ratios.empty());
}

TEST(ValidateDistillation, DegenerateOriginal) {
  Document empty;
  empty.doc_id = "empty";
  auto candidate = make_document("c", "", "", {"x"}, SourceKind::kDistilled);
  try {
    validate_distillation(empty, candidate, DistillationPolicy{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateOriginal);
  }
}

TEST(ValidateDistillation, AcceptanceIgnoresParagraphOrder) {
  std::mt19937_64 rng(5);
  auto original = doc_with_words({30, 10, 50, 20});
  std::vector<std::string> paragraphs;
  for (const auto& p : original.paragraphs) paragraphs.push_back(testing::first_words(p.text, p.word_count / 2));
  const auto baseline =
      validate_distillation(original, make_document("c", "", "", paragraphs, SourceKind::kDistilled), {});
  for (int i = 0; i < 20; ++i) {
    std::shuffle(paragraphs.begin(), paragraphs.end(), rng);
    auto r = validate_distillation(original, make_document("c", "", "", paragraphs, SourceKind::kDistilled), {});
    EXPECT_EQ(r.accepted, baseline.accepted);
    EXPECT_EQ(r.structure_preserved, baseline.structure_preserved);
    EXPECT_DOUBLE_EQ(r.overall_ratio, baseline.overall_ratio);
  }
}

TEST(ValidateDistillation, RecordsCitationCounts) {
  auto original = ingest_text("See Helmi et al. (2018) and Belokurov (2018).\n\nMore text here today.",
                              "Kawata et al. (2018)", "t");
  auto candidate = make_document("c", "", "", {"See Helmi et al. (2018).", "More text."}, SourceKind::kDistilled);
  auto r = validate_distillation(original, candidate, DistillationPolicy{});
  EXPECT_EQ(r.citations_before, 2u);
  EXPECT_EQ(r.citations_after, 1u);
}

TEST(DistillationPolicy, Validation) {
  DistillationPolicy p;
  EXPECT_NO_THROW(p.validate());
  p.target_ratio = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p.target_ratio = 1.5;
  EXPECT_THROW(p.validate(), Error);
  p.target_ratio = 0.1;
  p.ratio_tolerance = 0.1;
  EXPECT_THROW(p.validate(), Error);
}

TEST(DistillDocument, ScriptedHalfCompressionIsAccepted) {
  auto doc = doc_with_words({50, 50, 50, 50});
  ASSERT_EQ(doc.total_words(), 200u);
  MockChatBackend backend({reply_with(doc, {25, 25, 25, 25})});
  auto result = distill_document(doc, DistillationPolicy{}, backend);
  EXPECT_TRUE(result.report.accepted);
  EXPECT_DOUBLE_EQ(result.report.overall_ratio, 0.5);
  EXPECT_EQ(result.distilled.paragraphs.size(), 4u);
  EXPECT_EQ(result.distilled.source_kind, SourceKind::kDistilled);
  EXPECT_EQ(result.distilled.doc_id, "kawata-et-al-2018-distilled");
  EXPECT_EQ(result.distilled.source_doc_id, doc.doc_id);
  EXPECT_EQ(backend.call_count(), 1u);

  const auto request = backend.requests().front();
  ASSERT_EQ(request.size(), 2u);
  EXPECT_EQ(request[0].role, Role::kSystem);
  EXPECT_EQ(request[0].content, kPaperInstruction);
  EXPECT_EQ(request[1].content, doc.body());
}

TEST(DistillDocument, ThreeParagraphsForFourIsRejectedAfterRetries) {
  auto doc = doc_with_words({50, 50, 50, 50});
  const auto bad = reply_with(doc, {33, 33, 34});
  MockChatBackend backend({bad, bad, bad});
  auto result = distill_document(doc, DistillationPolicy{}, backend);
  EXPECT_FALSE(result.report.accepted);
  EXPECT_FALSE(result.report.structure_preserved);
  EXPECT_EQ(backend.call_count(), 3u);
  EXPECT_EQ(result.replies.size(), 3u);
}

TEST(DistillDocument, VerbatimReplyIsRejected) {
  auto doc = doc_with_words({20, 30});
  MockChatBackend backend({doc.body(), doc.body(), doc.body()});
  auto result = distill_document(doc, DistillationPolicy{}, backend);
  EXPECT_FALSE(result.report.accepted);
  EXPECT_DOUBLE_EQ(result.report.overall_ratio, 1.0);
}

TEST(DistillDocument, RetryRecoversAndKeepsBestAttempt) {
  auto doc = doc_with_words({40, 40});
  MockChatBackend backend({doc.body(), reply_with(doc, {20, 20})});
  auto result = distill_document(doc, DistillationPolicy{}, backend);
  EXPECT_TRUE(result.report.accepted);
  EXPECT_EQ(backend.call_count(), 2u);
  EXPECT_EQ(result.report.backend_calls, 2u);
  // both requests identical: retries re-send the same prompt
  EXPECT_EQ(backend.requests()[0], backend.requests()[1]);
}

TEST(DistillDocument, BestAttemptPrefersStructureThenCloseness) {
  auto doc = doc_with_words({40, 40});
  MockChatBackend backend({reply_with(doc, {40}), reply_with(doc, {36, 36}), reply_with(doc, {30, 30})});
  auto result = distill_document(doc, DistillationPolicy{}, backend);
  EXPECT_FALSE(result.report.accepted);
  EXPECT_TRUE(result.report.structure_preserved);
  EXPECT_DOUBLE_EQ(result.report.overall_ratio, 0.75);
}

TEST(DistillDocument, AtMostOnePlusMaxRetriesCalls) {
  auto doc = doc_with_words({10, 10});
  for (int retries = 0; retries <= 4; ++retries) {
    MockChatBackend backend;
    for (int i = 0; i < 10; ++i) backend.push_reply(doc.body());
    DistillationPolicy p;
    p.max_retries = retries;
    distill_document(doc, p, backend);
    EXPECT_EQ(backend.call_count(), static_cast<std::size_t>(retries + 1));
  }
}

TEST(DistillDocument, EmptyRepliesRaiseEmptyReply) {
  auto doc = doc_with_words({10});
  MockChatBackend backend({"", "  \n\n ", ""});
  try {
    distill_document(doc, DistillationPolicy{}, backend);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyReply);
  }
}

TEST(DistillDocument, BackendErrorPropagates) {
  auto doc = doc_with_words({10});
  MockChatBackend backend;
  backend.push_error(Error(ErrorCode::kBackendError, "boom"));
  try {
    distill_document(doc, DistillationPolicy{}, backend);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendError);
  }
  EXPECT_EQ(backend.call_count(), 1u);
}

TEST(DistillDocument, RejectsAlreadyDistilledInput) {
  auto doc = make_document("d", "Kawata et al. (2018)", "", {"a b"}, SourceKind::kDistilled);
  MockChatBackend backend({"a"});
  EXPECT_THROW(distill_document(doc, DistillationPolicy{}, backend), Error);
  EXPECT_EQ(backend.call_count(), 0u);
}

TEST(DistillDocument, LongDocumentsAreSplitIntoBudgetedBatches) {
  // 12 paragraphs of 400 words overflow a single request.
  std::vector<std::size_t> sizes(12, 400);
  auto doc = doc_with_words(sizes, 9);
  MockChatBackend backend;
  backend.set_fallback(offline_responder());
  DistillationPolicy p;
  auto result = distill_document(doc, p, backend);
  EXPECT_GT(backend.call_count(), 1u);
  for (const auto& req : backend.requests()) {
    EXPECT_LE(estimate_request_tokens(req), p.budget.prompt_limit());
  }
  EXPECT_TRUE(result.report.accepted);
  EXPECT_EQ(result.distilled.paragraphs.size(), 12u);
}

TEST(DistillDocument, MaxBatchParagraphsBoundsEachRequest) {
  auto doc = doc_with_words({10, 10, 10, 10, 10});
  MockChatBackend backend;
  backend.set_fallback(offline_responder());
  DistillationPolicy p;
  p.max_batch_paragraphs = 2;
  auto result = distill_document(doc, p, backend);
  EXPECT_EQ(backend.call_count(), 3u);
  EXPECT_TRUE(result.report.accepted);
}

TEST(DistillDocument, OversizedParagraphIsBudgetExceeded) {
  auto doc = doc_with_words({4000});
  MockChatBackend backend({"x"});
  try {
    distill_document(doc, DistillationPolicy{}, backend);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
  }
  EXPECT_EQ(backend.call_count(), 0u);
}

TEST(DistillationReport, SerializesWithStableFieldOrder) {
  auto original = doc_with_words({10});
  auto r = validate_distillation(original, original, DistillationPolicy{});
  const auto j = to_json(r);
  EXPECT_EQ(j.begin().key(), "original_doc_id");
  EXPECT_EQ(j["overall_ratio"].get<double>(), 1.0);
  EXPECT_FALSE(j["accepted"].get<bool>());
}

}  // namespace
}  // namespace papertalk
