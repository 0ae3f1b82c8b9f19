// papertalk: ingest, distill, index, ask, chat, serve.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "papertalk/service.hpp"
#include "papertalk/workspace.hpp"

namespace pt = papertalk;

namespace {

constexpr int kUsageError = 2;
constexpr int kPipelineError = 1;

struct Options {
  bool mock = false;
  bool json = false;
  std::string config_file;
  std::string workspace;
  std::string script_file;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pt::Error(pt::ErrorCode::kIoError, "cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Scripted replies are queued ahead of the offline responder.
void load_script(pt::Backends& backends, const std::string& path) {
  auto mock = std::dynamic_pointer_cast<pt::MockChatBackend>(backends.chat);
  if (!mock) throw CLI::ValidationError("--script", "requires --mock");
  const auto replies = pt::Json::parse(read_file(path), nullptr, false);
  if (replies.is_discarded() || !replies.is_array()) {
    throw CLI::ValidationError("--script", path + " must hold a JSON array of strings");
  }
  for (const auto& r : replies) {
    if (!r.is_string()) throw CLI::ValidationError("--script", "every reply must be a string");
    mock->push_reply(r.get<std::string>());
  }
}

std::unique_ptr<pt::Workspace> open_workspace(const Options& opt) {
  std::optional<std::filesystem::path> file;
  if (!opt.config_file.empty()) file = opt.config_file;
  auto config = pt::load_config(file);
  if (opt.mock) config.backend.mock_mode = true;
  if (!opt.workspace.empty()) config.workspace = opt.workspace;
  config.validate();
  auto backends = pt::make_backends(config.backend);
  if (!opt.script_file.empty()) load_script(backends, opt.script_file);
  return std::make_unique<pt::Workspace>(config, backends);
}

void print_citations(const pt::CitationReport& report) {
  if (report.detected.empty()) return;
  std::cout << "\nCitations:\n";
  for (const auto& c : report.grounded) std::cout << "  [in corpus]     " << c << '\n';
  for (const auto& c : report.ungrounded) std::cout << "  [not in corpus] " << c << '\n';
}

void print_turn(const pt::ChatTurn& turn, bool show_steps) {
  if (show_steps) {
    std::cout << "standalone: " << turn.standalone_question << '\n' << "sources:";
    for (const auto& h : turn.retrieved.hits) std::cout << " [" << h.chunk.citation_key << ']';
    std::cout << "\n\n";
  }
  std::cout << turn.answer << '\n';
  print_citations(turn.citation_report);
}

int run_chat(pt::Workspace& ws, bool json, const std::string& transcript_path) {
  const auto id = ws.create_session();
  if (!json) std::cout << "session " << id << " (empty line or /quit to leave)\n";
  std::string line;
  while (true) {
    if (!json) std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (pt::trim(line).empty() || pt::trim(line) == "/quit") break;
    try {
      const auto turn = ws.post_message(id, line);
      if (json) {
        std::cout << pt::to_json(turn).dump() << '\n';
      } else {
        print_turn(turn, true);
        std::cout << '\n';
      }
    } catch (const pt::Error& e) {
      // a failed turn leaves the session intact; keep the loop going
      std::cerr << "error: " << e.stage().value_or("chat") << ": " << pt::error_code_name(e.code())
                << ": " << e.what() << '\n';
    }
  }
  if (!transcript_path.empty()) {
    std::ofstream out(transcript_path, std::ios::binary | std::ios::trunc);
    if (!out) throw pt::Error(pt::ErrorCode::kIoError, "cannot write " + transcript_path);
    out << pt::to_jsonl(ws.transcript(id));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chat with a corpus of papers through retrieval-augmented prompting."};
  app.require_subcommand(1);
  Options opt;
  app.add_flag("--mock", opt.mock, "Use the offline chat and embedding backends");
  app.add_flag("--json", opt.json, "Print the same JSON payloads as the HTTP API");
  app.add_option("--config", opt.config_file, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--workspace", opt.workspace, "Workspace directory (corpus, index, chunks)");
  app.add_option("--script", opt.script_file, "JSON array of chat replies served first (mock mode)")
      ->check(CLI::ExistingFile);

  std::string file, key, title, doc_id, question, transcript, host = "127.0.0.1";
  std::optional<double> ratio;
  std::size_t k = 4;
  int port = 8080;

  auto* ingest = app.add_subcommand("ingest", "Add a plain-text paper to the corpus");
  ingest->add_option("file", file, "Text file, paragraphs separated by blank lines")->required();
  ingest->add_option("--key", key, "Citation key, e.g. \"Kawata et al. (2018)\"")->required();
  ingest->add_option("--title", title, "Paper title");

  auto* distill = app.add_subcommand("distill", "Distill a paper, keeping its paragraph structure");
  distill->add_option("doc_id", doc_id)->required();
  distill->add_option("--ratio", ratio, "Target word ratio")->check(CLI::Range(0.0, 1.0));

  auto* index = app.add_subcommand("index", "Vector index maintenance");
  index->require_subcommand(1);
  auto* rebuild = index->add_subcommand("rebuild", "Re-chunk and re-embed the whole corpus");

  auto* ask = app.add_subcommand("ask", "Ask one question");
  ask->add_option("question", question)->required();
  ask->add_option("--k", k, "Chunks to retrieve")->check(CLI::PositiveNumber);

  auto* chat = app.add_subcommand("chat", "Interactive conversation over one session");
  chat->add_option("--transcript", transcript, "Write the session as JSONL on exit");

  auto* serve = app.add_subcommand("serve", "Serve the JSON API");
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  const char* command = app.get_subcommands().front()->get_name().c_str();
  try {
    auto ws = open_workspace(opt);

    if (*ingest) {
      const auto id = ws->add_document(read_file(file), key, title);
      if (opt.json) {
        std::cout << pt::Json{{"doc_id", id}}.dump() << '\n';
      } else {
        std::cout << id << '\n';
      }
    } else if (*distill) {
      const auto report = ws->distill(doc_id, ratio);
      if (opt.json) {
        std::cout << pt::to_json(report).dump() << '\n';
      } else {
        std::cout << report.distilled_doc_id << ": " << report.original_words << " -> "
                  << report.distilled_words << " words (ratio " << report.overall_ratio << "), "
                  << report.distilled_paragraphs << "/" << report.original_paragraphs
                  << " paragraphs, " << (report.accepted ? "accepted" : "rejected") << '\n';
      }
      if (!report.accepted) {
        throw pt::Error(pt::ErrorCode::kDistillationRejected,
                        "no attempt met the ratio and structure checks");
      }
    } else if (*rebuild) {
      const auto n = ws->rebuild_index();
      if (opt.json) {
        std::cout << pt::Json{{"chunks_indexed", n}}.dump() << '\n';
      } else {
        std::cout << "indexed " << n << " chunks\n";
      }
    } else if (*ask) {
      const auto turn = ws->ask(question, k);
      if (opt.json) {
        std::cout << pt::to_json(turn).dump() << '\n';
      } else {
        print_turn(turn, false);
      }
    } else if (*chat) {
      return run_chat(*ws, opt.json, transcript);
    } else if (*serve) {
      pt::Service service(*ws);
      const int bound = service.bind(host, port);
      std::cerr << "listening on http://" << host << ':' << bound << '\n';
      service.serve();
    }
    return 0;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const pt::Error& e) {
    std::cerr << "error: " << e.stage().value_or(command) << ": " << pt::error_code_name(e.code())
              << ": " << e.what() << '\n';
    return kPipelineError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << command << ": " << e.what() << '\n';
    return kPipelineError;
  }
}
