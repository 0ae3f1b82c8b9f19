#include "papertalk/distill.hpp"

#include <cmath>
#include <sstream>

#include "papertalk/citation.hpp"
#include "papertalk/prompts.hpp"

namespace papertalk {
namespace {

// Slack for floating-point comparison at the tolerance boundary.
constexpr double kRatioEpsilon = 1e-12;

bool within_tolerance(double ratio, const DistillationPolicy& policy) {
  return std::abs(ratio - policy.target_ratio) <= policy.ratio_tolerance + kRatioEpsilon;
}

std::string join_paragraphs(const std::vector<Paragraph>& paragraphs) {
  std::string out;
  for (const auto& p : paragraphs) {
    if (!out.empty()) out += "\n\n";
    out += p.text;
  }
  return out;
}

std::size_t words_in(const std::vector<Paragraph>& paragraphs) {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += p.word_count;
  return n;
}

std::size_t words_in(const std::vector<std::string>& paragraphs) {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += word_count(p);
  return n;
}

// A batch fits when its request is within the prompt limit and the expected
// reply still fits the total window.
bool batch_fits(const std::vector<Paragraph>& batch, const DistillationPolicy& policy) {
  const auto request = estimate_request_tokens(distill_messages(batch, policy));
  const auto body = estimate_tokens(join_paragraphs(batch));
  const auto reply = static_cast<std::size_t>(std::ceil(static_cast<double>(body) * policy.target_ratio));
  return request <= policy.budget.prompt_limit() && request + reply <= policy.budget.max_total;
}

std::vector<std::vector<Paragraph>> plan_batches(const Document& doc,
                                                 const DistillationPolicy& policy) {
  std::vector<std::vector<Paragraph>> batches;
  std::vector<Paragraph> current;
  for (const auto& p : doc.paragraphs) {
    auto candidate = current;
    candidate.push_back(p);
    const bool over_count =
        policy.max_batch_paragraphs != 0 && candidate.size() > policy.max_batch_paragraphs;
    if (!over_count && batch_fits(candidate, policy)) {
      current = std::move(candidate);
      continue;
    }
    if (current.empty()) {
      throw Error(ErrorCode::kBudgetExceeded,
                  "paragraph " + std::to_string(p.index) + " of '" + doc.doc_id +
                      "' does not fit the token budget on its own");
    }
    batches.push_back(std::move(current));
    current = {p};
    if (!batch_fits(current, policy)) {
      throw Error(ErrorCode::kBudgetExceeded,
                  "paragraph " + std::to_string(p.index) + " of '" + doc.doc_id +
                      "' does not fit the token budget on its own");
    }
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

struct Attempt {
  std::vector<std::string> paragraphs;
  bool structure_preserved = false;
  double ratio = 0.0;

  bool acceptable(const DistillationPolicy& policy) const {
    return structure_preserved && within_tolerance(ratio, policy);
  }
  // Orders attempts: structure first, then closeness to the target.
  bool better_than(const Attempt& other, const DistillationPolicy& policy) const {
    if (paragraphs.empty() != other.paragraphs.empty()) return other.paragraphs.empty();
    if (structure_preserved != other.structure_preserved) return structure_preserved;
    return std::abs(ratio - policy.target_ratio) < std::abs(other.ratio - policy.target_ratio);
  }
};

}  // namespace

void DistillationPolicy::validate() const {
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target_ratio must lie in (0, 1]");
  }
  if (!(ratio_tolerance >= 0.0 && ratio_tolerance < target_ratio)) {
    throw Error(ErrorCode::kInvalidArgument, "ratio_tolerance must lie in [0, target_ratio)");
  }
  if (max_retries < 0) throw Error(ErrorCode::kInvalidArgument, "max_retries must be >= 0");
  budget.validate();
}

Json to_json(const DistillationReport& r) {
  Json o;
  o["original_doc_id"] = r.original_doc_id;
  o["distilled_doc_id"] = r.distilled_doc_id;
  o["per_paragraph_ratios"] = r.per_paragraph_ratios;
  o["overall_ratio"] = r.overall_ratio;
  o["structure_preserved"] = r.structure_preserved;
  o["accepted"] = r.accepted;
  o["target_ratio"] = r.target_ratio;
  o["ratio_tolerance"] = r.ratio_tolerance;
  o["original_paragraphs"] = r.original_paragraphs;
  o["distilled_paragraphs"] = r.distilled_paragraphs;
  o["original_words"] = r.original_words;
  o["distilled_words"] = r.distilled_words;
  o["citations_before"] = r.citations_before;
  o["citations_after"] = r.citations_after;
  o["backend_calls"] = r.backend_calls;
  return o;
}

std::string format_percent(double ratio) {
  const double tenths = std::round(ratio * 1000.0);
  std::ostringstream out;
  if (std::fmod(tenths, 10.0) == 0.0) {
    out << static_cast<long long>(tenths / 10.0);
  } else {
    out << static_cast<long long>(tenths) / 10 << '.' << static_cast<long long>(tenths) % 10;
  }
  out << '%';
  return out.str();
}

std::string distill_instruction(const DistillationPolicy& policy) {
  std::string text(prompts::kDistillTemplate);
  const std::string_view placeholder = "{percent}";
  text.replace(text.find(placeholder), placeholder.size(), format_percent(policy.target_ratio));
  return text;
}

std::string build_distill_prompt(const Document& doc, const DistillationPolicy& policy) {
  return distill_instruction(policy) + "\n\n" + doc.body();
}

std::vector<ChatMessage> distill_messages(const std::vector<Paragraph>& paragraphs,
                                          const DistillationPolicy& policy) {
  return {{Role::kSystem, distill_instruction(policy)},
          {Role::kUser, join_paragraphs(paragraphs)}};
}

std::string distilled_doc_id(const std::string& raw_doc_id) { return raw_doc_id + "-distilled"; }

DistillationReport validate_distillation(const Document& original, const Document& candidate,
                                         const DistillationPolicy& policy) {
  DistillationReport r;
  r.original_doc_id = original.doc_id;
  r.distilled_doc_id = candidate.doc_id;
  r.target_ratio = policy.target_ratio;
  r.ratio_tolerance = policy.ratio_tolerance;
  r.original_paragraphs = original.paragraphs.size();
  r.distilled_paragraphs = candidate.paragraphs.size();
  r.original_words = original.total_words();
  r.distilled_words = candidate.total_words();
  if (r.original_words == 0) {
    throw Error(ErrorCode::kDegenerateOriginal,
                "original '" + original.doc_id + "' has no words to compress");
  }
  r.structure_preserved = r.original_paragraphs == r.distilled_paragraphs;
  r.overall_ratio =
      static_cast<double>(r.distilled_words) / static_cast<double>(r.original_words);
  if (r.structure_preserved) {
    for (std::size_t i = 0; i < original.paragraphs.size(); ++i) {
      r.per_paragraph_ratios.push_back(static_cast<double>(candidate.paragraphs[i].word_count) /
                                       static_cast<double>(original.paragraphs[i].word_count));
    }
  }
  r.citations_before = find_citations(original.body()).size();
  r.citations_after = find_citations(candidate.body()).size();
  r.accepted = r.structure_preserved && within_tolerance(r.overall_ratio, policy);
  return r;
}

DistillationResult distill_document(const Document& doc, const DistillationPolicy& policy,
                                    ChatBackend& backend) {
  policy.validate();
  if (doc.source_kind != SourceKind::kRaw) {
    throw Error(ErrorCode::kInvalidArgument, "'" + doc.doc_id + "' is already distilled");
  }

  DistillationResult result;
  std::size_t calls = 0;
  std::vector<std::string> distilled_paragraphs;
  bool all_batches_preserved = true;

  for (const auto& batch : plan_batches(doc, policy)) {
    const auto messages = distill_messages(batch, policy);
    const auto batch_words = words_in(batch);
    Attempt best;
    bool have_best = false;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
      auto reply = complete_chat(messages, backend, policy.budget);
      ++calls;
      Attempt current;
      current.paragraphs = split_paragraphs(reply);
      result.replies.push_back(std::move(reply));
      current.structure_preserved = current.paragraphs.size() == batch.size();
      current.ratio =
          static_cast<double>(words_in(current.paragraphs)) / static_cast<double>(batch_words);
      if (!have_best || current.better_than(best, policy)) {
        best = current;
        have_best = true;
      }
      if (current.acceptable(policy)) break;
    }
    if (best.paragraphs.empty()) {
      throw Error(ErrorCode::kEmptyReply,
                  "backend returned no text for '" + doc.doc_id + "' after " +
                      std::to_string(policy.max_retries + 1) + " attempts");
    }
    all_batches_preserved = all_batches_preserved && best.structure_preserved;
    for (auto& p : best.paragraphs) distilled_paragraphs.push_back(std::move(p));
  }

  result.distilled = make_document(distilled_doc_id(doc.doc_id), doc.citation_key, doc.title,
                                   distilled_paragraphs, SourceKind::kDistilled);
  result.distilled.source_doc_id = doc.doc_id;
  result.report = validate_distillation(doc, result.distilled, policy);
  result.report.backend_calls = calls;
  // Per-batch count mismatches can cancel out in the totals.
  if (!all_batches_preserved) {
    result.report.structure_preserved = false;
    result.report.accepted = false;
    result.report.per_paragraph_ratios.clear();
  }
  return result;
}

}  // namespace papertalk
