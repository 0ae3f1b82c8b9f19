#pragma once

#include <string>
#include <vector>

#include "papertalk/corpus.hpp"
#include "papertalk/json.hpp"
#include "papertalk/llm.hpp"

namespace papertalk {

struct DistillationPolicy {
  double target_ratio = 0.5;
  double ratio_tolerance = 0.15;
  int max_retries = 2;
  // Upper bound on paragraphs sent per backend call; 0 means as many as fit
  // the token budget (usually the whole document).
  std::size_t max_batch_paragraphs = 0;
  TokenBudget budget;

  /// Throws kInvalidArgument unless 0 < target_ratio <= 1 and
  /// 0 <= ratio_tolerance < target_ratio.
  void validate() const;
};

struct DistillationReport {
  std::string original_doc_id;
  std::string distilled_doc_id;
  std::vector<double> per_paragraph_ratios;
  double overall_ratio = 0.0;
  bool structure_preserved = false;
  bool accepted = false;

  double target_ratio = 0.5;
  double ratio_tolerance = 0.15;
  std::size_t original_paragraphs = 0;
  std::size_t distilled_paragraphs = 0;
  std::size_t original_words = 0;
  std::size_t distilled_words = 0;
  // Citation-key-shaped substrings before and after; recorded, not enforced.
  std::size_t citations_before = 0;
  std::size_t citations_after = 0;
  std::size_t backend_calls = 0;
};

Json to_json(const DistillationReport& report);

/// "50%" for 0.5, "33.3%" for 0.333.
std::string format_percent(double ratio);

std::string distill_instruction(const DistillationPolicy& policy);

/// Instruction followed by the document's paragraphs, blank-line separated.
std::string build_distill_prompt(const Document& doc, const DistillationPolicy& policy);

/// Request sent per batch: the instruction as system message and the
/// paragraph text as user message.
std::vector<ChatMessage> distill_messages(const std::vector<Paragraph>& paragraphs,
                                          const DistillationPolicy& policy);

/// Pure check of a candidate against its original. Throws kDegenerateOriginal
/// when the original has no words.
DistillationReport validate_distillation(const Document& original, const Document& candidate,
                                         const DistillationPolicy& policy);

struct DistillationResult {
  Document distilled;
  DistillationReport report;
  // Every raw backend reply, in call order, kept for inspection.
  std::vector<std::string> replies;
};

/// Sends the document through `backend` batch by batch, re-sending a batch's
/// prompt up to max_retries times while its reply fails validation. Returns
/// the best attempt with accepted=false when no attempt passes.
DistillationResult distill_document(const Document& doc, const DistillationPolicy& policy,
                                    ChatBackend& backend);

std::string distilled_doc_id(const std::string& raw_doc_id);

}  // namespace papertalk
