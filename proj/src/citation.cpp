#include "papertalk/citation.hpp"

#include <cctype>

namespace papertalk {
namespace {

bool is_surname_char(unsigned char c) {
  return std::isalpha(c) || c == '\'' || c == '-' || c >= 0x80;
}

bool is_surname_start(unsigned char c) {
  return (c >= 'A' && c <= 'Z') || c >= 0xC0;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string fold(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Surname ending at `end` (exclusive). Returns its start or npos. Mirrors a
// leftmost regex match: the earliest valid start inside the maximal run.
std::size_t surname_before(std::string_view text, std::size_t end) {
  std::size_t begin = end;
  while (begin > 0 && is_surname_char(static_cast<unsigned char>(text[begin - 1]))) --begin;
  for (std::size_t i = begin; i < end; ++i) {
    if (is_surname_start(static_cast<unsigned char>(text[i]))) return i;
  }
  return std::string_view::npos;
}

bool ends_with_at(std::string_view text, std::size_t end, std::string_view suffix) {
  return end >= suffix.size() && text.substr(end - suffix.size(), suffix.size()) == suffix;
}

// Parses "(YYYY)" at `open`; returns the year or 0.
int year_at(std::string_view text, std::size_t open) {
  if (open + 6 > text.size() || text[open] != '(' || text[open + 5] != ')') return 0;
  for (std::size_t i = 1; i <= 4; ++i) {
    if (!is_digit(text[open + i])) return 0;
  }
  const auto century = text.substr(open + 1, 2);
  if (century != "19" && century != "20") return 0;
  return std::stoi(std::string(text.substr(open + 1, 4)));
}

// Attempts a match whose year parenthesis opens at `open`.
std::optional<CitationMatch> match_at(std::string_view text, std::size_t open) {
  const int year = year_at(text, open);
  if (year == 0 || open == 0 || text[open - 1] != ' ') return std::nullopt;
  const std::size_t name_end = open - 1;

  CitationKey key;
  key.year = year;
  std::size_t start = std::string_view::npos;

  constexpr std::string_view kEtAl = " et al.";
  if (ends_with_at(text, name_end, kEtAl)) {
    const std::size_t surname_end = name_end - kEtAl.size();
    start = surname_before(text, surname_end);
    if (start == std::string_view::npos) return std::nullopt;
    key.form = CitationKey::Form::kEtAl;
    key.first_surname = std::string(text.substr(start, surname_end - start));
  } else {
    const std::size_t second = surname_before(text, name_end);
    if (second == std::string_view::npos) return std::nullopt;
    key.first_surname = std::string(text.substr(second, name_end - second));
    start = second;
    constexpr std::string_view kAmp = " & ";
    if (ends_with_at(text, second, kAmp)) {
      const std::size_t first_end = second - kAmp.size();
      const std::size_t first = surname_before(text, first_end);
      if (first != std::string_view::npos) {
        key.form = CitationKey::Form::kPair;
        key.second_surname = key.first_surname;
        key.first_surname = std::string(text.substr(first, first_end - first));
        start = first;
      }
    }
  }

  CitationMatch m;
  m.offset = start;
  m.text = std::string(text.substr(start, open + 6 - start));
  m.key = std::move(key);
  return m;
}

}  // namespace

std::string CitationKey::to_string() const {
  std::string out = first_surname;
  switch (form) {
    case Form::kSingle: break;
    case Form::kPair: out += " & " + second_surname; break;
    case Form::kEtAl: out += " et al."; break;
  }
  return out + " (" + std::to_string(year) + ")";
}

std::string CitationKey::normalized() const {
  std::string out = fold(first_surname);
  switch (form) {
    case Form::kSingle: out += "|"; break;
    case Form::kPair: out += "&" + fold(second_surname); break;
    case Form::kEtAl: out += "+"; break;
  }
  return out + "|" + std::to_string(year);
}

std::optional<CitationKey> parse_citation_key(std::string_view text) {
  if (text.size() < 8) return std::nullopt;
  auto m = match_at(text, text.size() - 6);
  if (!m || m->offset != 0) return std::nullopt;
  return m->key;
}

bool is_valid_citation_key(std::string_view text) {
  return parse_citation_key(text).has_value();
}

std::vector<CitationMatch> find_citations(std::string_view text) {
  std::vector<CitationMatch> out;
  std::size_t pos = 0;
  while ((pos = text.find('(', pos)) != std::string_view::npos) {
    if (auto m = match_at(text, pos)) {
      out.push_back(std::move(*m));
      pos += 6;
    } else {
      ++pos;
    }
  }
  return out;
}

}  // namespace papertalk
