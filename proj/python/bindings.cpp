#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "pathforge/cli.hpp"
#include "pathforge/engine.hpp"
#include "pathforge/evaluation.hpp"
#include "pathforge/extraction.hpp"
#include "pathforge/io.hpp"
#include "pathforge/records.hpp"
#include "pathforge/validation.hpp"

namespace py = pybind11;
using namespace pathforge;
using nlohmann::json;

namespace {

json graph_json(const ModelGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes)
    nodes.push_back({{"id", n.id.value}, {"kind", to_string(n.kind)}, {"text", n.text}});
  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"from", e.from.value}, {"answer", to_string(e.answer)}, {"to", e.to.value}});
  return {{"nodes", nodes}, {"edges", edges}, {"root", g.root.value}};
}

std::string parse_model_json_py(const std::string& text) {
  ParseOutcome o = parse_model_json(text);
  json out = {{"repair_log", o.repair_log}};
  if (o.graph) out["graph"] = graph_json(*o.graph);
  if (o.failure) out["failure"] = {{"offset", o.failure->offset}, {"message", o.failure->message}};
  return out.dump();
}

std::string validate_document(const std::string& document) {
  PathwayDocument doc = parse_pathway_document(document);
  return to_json(make_report(doc.draft, &doc.article)).dump();
}

std::string canonical_document(const std::string& document) {
  ImportedPathway p = import_pathway(document);
  return export_pathway(p.pathway, p.article);
}

std::string build_prompt_py(const std::string& article) {
  PromptBundle b = build_prompt(parse_article(article, "<python>"));
  return json{{"system_message", b.system_message},
              {"user_message", b.user_message},
              {"response_schema_version", b.response_schema_version}}
      .dump();
}

std::string interview(const std::string& document, const std::vector<std::string>& answers) {
  auto pathway = std::make_shared<const Pathway>(import_pathway(document).pathway);
  InterviewSession s = start(pathway);
  for (const auto& a : answers) {
    if (a == "undo") {
      s = undo(s);
      continue;
    }
    auto parsed = parse_answer(a);
    if (!parsed) throw Error(Errc::MalformedDocument, "answer must be yes, no or undo, got '" + a + "'");
    s = answer(s, *parsed);
  }
  return to_json(s).dump();
}

std::string match_documents(const std::string& a, const std::string& b, double threshold) {
  return to_json(structural_match(import_pathway(a).pathway, import_pathway(b).pathway, threshold)).dump();
}

std::string extract_with_fixtures(const std::string& article, const std::string& fixture_dir) {
  ProviderConfig config;
  config.kind = ProviderKind::MockFixture;
  config.fixture_dir = fixture_dir;
  auto provider = MockFixtureProvider::from_directory(fixture_dir);
  Article a = parse_article(article, "<python>");
  ExtractionResult r = extract(a, config, *provider);
  json out = to_json(r);
  if (r.pathway) out["document"] = export_pathway(*r.pathway, a);
  return out.dump();
}

py::tuple run_cli_py(const std::vector<std::string>& args, const std::string& input) {
  std::istringstream in(input);
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = run_cli(args, in, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_pathforge, m) {
  m.doc() = "Legal decision pathway toolkit (native core)";

  static py::exception<Error> error_type(m, "PathforgeError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type.ptr())(std::string(to_string(e.code())) + ": " + e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def("parse_model_json", &parse_model_json_py, py::arg("text"));
  m.def("validate_document", &validate_document, py::arg("document"));
  m.def("canonical_document", &canonical_document, py::arg("document"));
  m.def("build_prompt", &build_prompt_py, py::arg("article"));
  m.def("interview", &interview, py::arg("document"), py::arg("answers"));
  m.def("match_documents", &match_documents, py::arg("a"), py::arg("b"), py::arg("threshold") = 0.5);
  m.def("extract_with_fixtures", &extract_with_fixtures, py::arg("article"), py::arg("fixture_dir"));
  m.def("grounding_score", [](const std::string& node, const std::string& article) { return grounding_score(node, article); },
        py::arg("node_text"), py::arg("article_text"));
  m.def("dice_similarity", [](const std::string& a, const std::string& b) { return dice_similarity(a, b); },
        py::arg("a"), py::arg("b"));
  m.def("automatic_shown_first", [](std::uint64_t seed, const std::string& id) { return automatic_shown_first(seed, id); },
        py::arg("seed"), py::arg("trial_id"));
  m.def("run_cli", &run_cli_py, py::arg("args"), py::arg("input") = "");
}
