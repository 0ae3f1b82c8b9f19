#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "papertalk/chat.hpp"
#include "papertalk/distill.hpp"
#include "papertalk/vindex.hpp"
#include "papertalk/workspace.hpp"

namespace py = pybind11;
namespace pt = papertalk;

namespace {

py::object to_py(const pt::Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

pt::EmbeddingVector as_vector(std::vector<double> values) { return {std::move(values), ""}; }

std::vector<std::pair<std::string, double>> as_pairs(const std::vector<pt::SearchHit>& hits) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.emplace_back(h.chunk_id, h.score);
  return out;
}

pt::Config mock_config(const std::string& workspace, std::size_t dimension) {
  pt::Config c;
  c.backend.mock_mode = true;
  c.backend.mock_dimension = dimension;
  c.workspace = workspace;
  return c;
}

}  // namespace

PYBIND11_MODULE(papertalk, m) {
  m.doc() = "Retrieval-augmented chat over a corpus of papers.";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&m] { return py::object(py::exception<pt::Error>(m, "Error")); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pt::Error& e) {
      const auto& type = error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("code") = std::string(pt::error_code_name(e.code()));
      exc.attr("stage") = e.stage() ? py::cast(*e.stage()) : py::none();
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.def("estimate_tokens", &pt::estimate_tokens, py::arg("text"));
  m.def("word_count", &pt::word_count, py::arg("text"));
  m.def("split_paragraphs", &pt::split_paragraphs, py::arg("text"));
  m.def("is_valid_citation_key", &pt::is_valid_citation_key, py::arg("key"));
  m.def("find_citations", [](const std::string& text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    for (auto& c : pt::find_citations(text)) out.emplace_back(c.offset, std::move(c.text));
    return out;
  });

  py::class_<pt::Document>(m, "Document")
      .def_readonly("doc_id", &pt::Document::doc_id)
      .def_readonly("citation_key", &pt::Document::citation_key)
      .def_readonly("title", &pt::Document::title)
      .def_property_readonly("paragraphs",
                             [](const pt::Document& d) {
                               std::vector<std::string> out;
                               for (const auto& p : d.paragraphs) out.push_back(p.text);
                               return out;
                             })
      .def_property_readonly("source_kind",
                             [](const pt::Document& d) { return std::string(pt::source_kind_name(d.source_kind)); })
      .def("total_words", &pt::Document::total_words)
      .def("body", &pt::Document::body);

  m.def("ingest_text", &pt::ingest_text, py::arg("text"), py::arg("citation_key"), py::arg("title") = "");
  m.def(
      "make_distilled",
      [](const pt::Document& original, const std::vector<std::string>& paragraphs) {
        auto d = pt::make_document(pt::distilled_doc_id(original.doc_id), original.citation_key,
                                   original.title, paragraphs, pt::SourceKind::kDistilled);
        d.source_doc_id = original.doc_id;
        return d;
      },
      py::arg("original"), py::arg("paragraphs"));

  py::class_<pt::DistillationPolicy>(m, "DistillationPolicy")
      .def(py::init<>())
      .def_readwrite("target_ratio", &pt::DistillationPolicy::target_ratio)
      .def_readwrite("ratio_tolerance", &pt::DistillationPolicy::ratio_tolerance)
      .def_readwrite("max_retries", &pt::DistillationPolicy::max_retries);

  py::class_<pt::DistillationReport>(m, "DistillationReport")
      .def_readonly("overall_ratio", &pt::DistillationReport::overall_ratio)
      .def_readonly("per_paragraph_ratios", &pt::DistillationReport::per_paragraph_ratios)
      .def_readonly("structure_preserved", &pt::DistillationReport::structure_preserved)
      .def_readonly("accepted", &pt::DistillationReport::accepted)
      .def("to_dict", [](const pt::DistillationReport& r) { return to_py(pt::to_json(r)); });

  m.def("validate_distillation", &pt::validate_distillation, py::arg("original"), py::arg("candidate"),
        py::arg("policy") = pt::DistillationPolicy{});
  m.def("build_distill_prompt", &pt::build_distill_prompt, py::arg("document"),
        py::arg("policy") = pt::DistillationPolicy{});

  m.def(
      "mock_embed", [](const std::string& text, std::size_t d) { return pt::mock_embed(text, d).values; },
      py::arg("text"), py::arg("dimension") = 64);
  m.def(
      "normalize_vector", [](std::vector<double> v) { return pt::normalize_vector(as_vector(std::move(v))).values; },
      py::arg("values"));

  py::class_<pt::VectorIndex>(m, "VectorIndex")
      .def(py::init<std::size_t>(), py::arg("dimension") = 64)
      .def_property_readonly("dimension", &pt::VectorIndex::dimension)
      .def("__len__", &pt::VectorIndex::size)
      .def(
          "add",
          [](pt::VectorIndex& index, std::string id, std::vector<double> v) {
            index.add(std::move(id), as_vector(std::move(v)));
          },
          py::arg("chunk_id"), py::arg("vector"))
      .def(
          "add_many",
          [](pt::VectorIndex& index, const std::vector<std::pair<std::string, std::vector<double>>>& items) {
            std::vector<std::pair<std::string, pt::EmbeddingVector>> batch;
            for (const auto& [id, v] : items) batch.emplace_back(id, as_vector(v));
            index.add(batch);
          },
          py::arg("items"))
      .def(
          "search",
          [](const pt::VectorIndex& index, const std::vector<double>& q, std::size_t k) {
            return as_pairs(index.search(std::span<const double>(q), k));
          },
          py::arg("query"), py::arg("k"))
      .def("save",
           [](const pt::VectorIndex& index) {
             const auto bytes = index.save();
             return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
           })
      .def_static("load",
                  [](const py::bytes& data) {
                    const std::string raw = data;
                    return pt::VectorIndex::load(
                        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
                  })
      .def("save_file", &pt::VectorIndex::save_file)
      .def_static("load_file", &pt::VectorIndex::load_file)
      .def("__eq__", &pt::VectorIndex::operator==);

  m.def(
      "brute_force_topk",
      [](const std::vector<std::pair<std::string, std::vector<double>>>& entries, const std::vector<double>& q,
         std::size_t k) {
        std::vector<pt::IndexEntry> e;
        for (const auto& [id, v] : entries) e.push_back({id, v});
        return as_pairs(pt::brute_force_topk(e, q, k));
      },
      py::arg("entries"), py::arg("query"), py::arg("k"));

  m.def(
      "ground_citations",
      [](const std::string& answer, const std::vector<std::pair<std::string, std::string>>& corpus_keys) {
        pt::CitationDirectory directory;
        for (const auto& [key, doc_id] : corpus_keys) directory.add(key, doc_id);
        return to_py(pt::to_json(pt::ground_citations(answer, directory)));
      },
      py::arg("answer"), py::arg("corpus_keys"));

  py::class_<pt::MockChatBackend>(m, "MockChatBackend")
      .def(py::init<std::vector<std::string>>(), py::arg("replies") = std::vector<std::string>{})
      .def("push_reply", &pt::MockChatBackend::push_reply)
      .def("use_offline_responder", [](pt::MockChatBackend& b) { b.set_fallback(pt::offline_responder()); })
      .def_property_readonly("call_count", &pt::MockChatBackend::call_count)
      .def_property_readonly("requests", [](const pt::MockChatBackend& b) {
        std::vector<std::vector<std::pair<std::string, std::string>>> out;
        for (const auto& req : b.requests()) {
          auto& r = out.emplace_back();
          for (const auto& msg : req) r.emplace_back(std::string(pt::role_name(msg.role)), msg.content);
        }
        return out;
      });

  m.def(
      "condense_question",
      [](const std::vector<std::pair<std::string, std::string>>& history, const std::string& query,
         pt::MockChatBackend& backend) {
        std::vector<pt::ChatTurn> turns;
        for (const auto& [q, a] : history) {
          pt::ChatTurn t;
          t.user_query = q;
          t.answer = a;
          turns.push_back(std::move(t));
        }
        return pt::condense_question(turns, query, backend);
      },
      py::arg("history"), py::arg("query"), py::arg("backend"));

  py::class_<pt::Workspace>(m, "Workspace")
      .def(py::init([](const std::string& path, std::size_t dimension, bool persistent) {
             auto config = mock_config(path, dimension);
             return std::make_unique<pt::Workspace>(config, pt::make_backends(config.backend), persistent);
           }),
           py::arg("path") = "papertalk-data", py::arg("dimension") = 64, py::arg("persistent") = true,
           "Offline workspace: mock chat and embedding backends.")
      .def("add_document", &pt::Workspace::add_document, py::arg("text"), py::arg("citation_key"),
           py::arg("title") = "")
      .def("list_documents",
           [](const pt::Workspace& ws) {
             py::list out;
             for (const auto& d : ws.list_documents()) out.append(to_py(pt::to_json(d)));
             return out;
           })
      .def(
          "distill",
          [](pt::Workspace& ws, const std::string& id, std::optional<double> ratio) {
            return to_py(pt::to_json(ws.distill(id, ratio)));
          },
          py::arg("doc_id"), py::arg("target_ratio") = py::none())
      .def("rebuild_index", &pt::Workspace::rebuild_index)
      .def(
          "ask",
          [](pt::Workspace& ws, const std::string& q, std::optional<std::size_t> k) {
            return to_py(pt::to_json(ws.ask(q, k)));
          },
          py::arg("question"), py::arg("k") = py::none())
      .def("create_session", &pt::Workspace::create_session)
      .def("post_message",
           [](pt::Workspace& ws, const std::string& id, const std::string& q) {
             return to_py(pt::to_json(ws.post_message(id, q)));
           })
      .def("transcript", [](const pt::Workspace& ws, const std::string& id) {
        return to_py(pt::transcript_json(id, ws.transcript(id)));
      });
}
