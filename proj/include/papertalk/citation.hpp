#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace papertalk {

// Author-year citation key, grammar:
//   Surname( & Surname| et al.)? \((19|20)\d{2}\)
// A Surname is an uppercase ASCII letter or non-ASCII UTF-8 lead byte
// followed by letters, apostrophes, hyphens or further non-ASCII bytes.
struct CitationKey {
  enum class Form { kSingle, kPair, kEtAl };

  std::string first_surname;
  std::string second_surname;  // kPair only
  Form form = Form::kSingle;
  int year = 0;

  std::string to_string() const;
  // Case-folded surnames plus form and year; two keys ground each other iff
  // their normalized forms are equal.
  std::string normalized() const;
};

std::optional<CitationKey> parse_citation_key(std::string_view text);

bool is_valid_citation_key(std::string_view text);

struct CitationMatch {
  std::size_t offset = 0;  // byte offset of the match in the scanned text
  std::string text;        // exact matched substring
  CitationKey key;
};

/// All non-overlapping grammar matches in order of appearance.
std::vector<CitationMatch> find_citations(std::string_view text);

}  // namespace papertalk
