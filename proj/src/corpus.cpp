#include "papertalk/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>


#include "papertalk/citation.hpp"
#include "papertalk/error.hpp"
#include "papertalk/json.hpp"

namespace papertalk {
namespace fs = std::filesystem;

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_blank(std::string_view line) {
  for (char c : line) {
    if (!is_space(c)) return false;
  }
  return true;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

}  // namespace

std::string_view source_kind_name(SourceKind kind) {
  return kind == SourceKind::kRaw ? "raw" : "distilled";
}

SourceKind parse_source_kind(std::string_view name) {
  if (name == "raw") return SourceKind::kRaw;
  if (name == "distilled") return SourceKind::kDistilled;
  throw Error(ErrorCode::kInvalidArgument, "unknown source_kind '" + std::string(name) + "'");
}

std::size_t estimate_tokens(std::string_view text) {
  std::size_t chars = 0;
  for (char c : text) {
    // count UTF-8 lead bytes only
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++chars;
  }
  return (chars + 3) / 4;
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::string trim(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    auto t = trim(current);
    if (!t.empty()) out.push_back(std::move(t));
    current.clear();
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (is_blank(line)) {
      flush();
    } else {
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!current.empty()) current += '\n';
      current += line;
    }
    pos = nl + 1;
  }
  flush();
  return out;
}

Paragraph make_paragraph(std::size_t index, std::string text) {
  Paragraph p;
  p.index = index;
  p.word_count = word_count(text);
  p.token_estimate = estimate_tokens(text);
  p.text = std::move(text);
  return p;
}

std::size_t Document::total_words() const {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += p.word_count;
  return n;
}

std::string Document::body() const {
  std::string out;
  for (const auto& p : paragraphs) {
    if (!out.empty()) out += "\n\n";
    out += p.text;
  }
  return out;
}

std::string doc_id_for(std::string_view citation_key) {
  std::string out;
  bool pending_dash = false;
  for (char c : citation_key) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      if (pending_dash && !out.empty()) out += '-';
      pending_dash = false;
      out += static_cast<char>(std::tolower(u));
    } else if (u >= 0x80) {
      // keep non-ASCII bytes so distinct accented surnames stay distinct
      if (pending_dash && !out.empty()) out += '-';
      pending_dash = false;
      out += c;
    } else {
      pending_dash = true;
    }
  }
  return out;
}

Document make_document(std::string doc_id, std::string citation_key, std::string title,
                       const std::vector<std::string>& paragraphs, SourceKind kind) {
  Document doc;
  doc.doc_id = std::move(doc_id);
  doc.citation_key = std::move(citation_key);
  doc.title = std::move(title);
  doc.source_kind = kind;
  for (const auto& text : paragraphs) {
    auto t = trim(text);
    if (t.empty()) continue;
    doc.paragraphs.push_back(make_paragraph(doc.paragraphs.size(), std::move(t)));
  }
  if (doc.paragraphs.empty()) {
    throw Error(ErrorCode::kEmptyInput, "document '" + doc.doc_id + "' has no text");
  }
  return doc;
}

Document ingest_text(std::string_view raw, std::string_view citation_key,
                     std::string_view title) {
  if (is_blank(raw)) throw Error(ErrorCode::kEmptyInput, "input text is empty");
  if (!is_valid_citation_key(citation_key)) {
    throw Error(ErrorCode::kMalformedCitationKey,
                "citation key '" + std::string(citation_key) +
                    "' does not look like 'Surname et al. (YYYY)'");
  }
  return make_document(doc_id_for(citation_key), std::string(citation_key), std::string(title),
                       split_paragraphs(raw), SourceKind::kRaw);
}

const Document& Corpus::add(Document raw) {
  if (raw.source_kind != SourceKind::kRaw) {
    throw Error(ErrorCode::kInvalidArgument, "only raw documents can be added");
  }
  if (find(raw.doc_id) != nullptr) {
    throw Error(ErrorCode::kDuplicateDocument, "doc_id '" + raw.doc_id + "' already exists");
  }
  for (const auto& [id, entry] : entries_) {
    if (entry.raw.citation_key == raw.citation_key) {
      throw Error(ErrorCode::kDuplicateDocument,
                  "citation key '" + raw.citation_key + "' already exists");
    }
  }
  auto id = raw.doc_id;
  auto [it, inserted] = entries_.emplace(std::move(id), Entry{std::move(raw), std::nullopt});
  return it->second.raw;
}

void Corpus::set_distilled(const std::string& raw_doc_id, Document distilled) {
  auto it = entries_.find(raw_doc_id);
  if (it == entries_.end()) throw Error(ErrorCode::kNotFound, "no document '" + raw_doc_id + "'");
  distilled.source_kind = SourceKind::kDistilled;
  distilled.source_doc_id = raw_doc_id;
  distilled.citation_key = it->second.raw.citation_key;
  it->second.distilled = std::move(distilled);
}

const Document* Corpus::find(std::string_view doc_id) const {
  for (const auto& [id, entry] : entries_) {
    if (entry.raw.doc_id == doc_id) return &entry.raw;
    if (entry.distilled && entry.distilled->doc_id == doc_id) return &*entry.distilled;
  }
  return nullptr;
}

const Corpus::Entry* Corpus::find_entry(std::string_view raw_doc_id) const {
  auto it = entries_.find(raw_doc_id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<const Document*> Corpus::all_documents() const {
  std::vector<const Document*> out;
  for (const auto& [id, entry] : entries_) {
    out.push_back(&entry.raw);
    if (entry.distilled) out.push_back(&*entry.distilled);
  }
  return out;
}

std::vector<const Document*> Corpus::preferred_documents() const {
  std::vector<const Document*> out;
  for (const auto& [id, entry] : entries_) out.push_back(&entry.preferred());
  return out;
}

void save_document(const Document& doc, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / (doc.doc_id + ".txt"), doc.body() + "\n");
  Json meta;
  meta["doc_id"] = doc.doc_id;
  meta["citation_key"] = doc.citation_key;
  meta["title"] = doc.title;
  meta["source_kind"] = source_kind_name(doc.source_kind);
  if (!doc.source_doc_id.empty()) meta["source_doc_id"] = doc.source_doc_id;
  write_file(dir / (doc.doc_id + ".json"), meta.dump(2) + "\n");
}

Document load_document(const fs::path& sidecar) {
  Json meta;
  try {
    meta = Json::parse(read_file(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIoError, sidecar.string() + ": " + e.what());
  }
  auto text_path = sidecar;
  text_path.replace_extension(".txt");
  auto doc = make_document(meta.at("doc_id").get<std::string>(),
                           meta.at("citation_key").get<std::string>(),
                           meta.value("title", std::string{}), split_paragraphs(read_file(text_path)),
                           parse_source_kind(meta.at("source_kind").get<std::string>()));
  doc.source_doc_id = meta.value("source_doc_id", std::string{});
  return doc;
}

void Corpus::save(const fs::path& dir) const {
  fs::create_directories(dir);
  // drop stale files so the directory mirrors the in-memory corpus
  for (const auto& item : fs::directory_iterator(dir)) {
    const auto ext = item.path().extension();
    if (ext == ".json" || ext == ".txt") fs::remove(item.path());
  }
  for (const auto* doc : all_documents()) save_document(*doc, dir);
}

Corpus Corpus::load(const fs::path& dir) {
  Corpus corpus;
  if (!fs::exists(dir)) return corpus;
  std::vector<fs::path> sidecars;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.path().extension() == ".json") sidecars.push_back(item.path());
  }
  std::sort(sidecars.begin(), sidecars.end());
  std::vector<Document> distilled;
  for (const auto& path : sidecars) {
    auto doc = load_document(path);
    if (doc.source_kind == SourceKind::kRaw) {
      corpus.add(std::move(doc));
    } else {
      distilled.push_back(std::move(doc));
    }
  }
  for (auto& doc : distilled) {
    auto source = doc.source_doc_id;
    corpus.set_distilled(source, std::move(doc));
  }
  return corpus;
}

}  // namespace papertalk
