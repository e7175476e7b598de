#include "pathforge/io.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pathforge/text.hpp"

namespace pathforge {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  thread_local std::mt19937_64 rng{std::random_device{}()};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(rng() % 1000000000ULL);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw Error(Errc::Io, "cannot write '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::Io, "cannot replace '" + path.string() + "'");
  }
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string export_pathway(const Pathway& pathway, const Article& article) {
  if (pathway.article_id() != article.id)
    throw Error(Errc::InvalidPathway,
                "pathway '" + pathway.id() + "' belongs to article '" + pathway.article_id() + "', not '" + article.id + "'");
  const std::size_t length = article.char_count();

  json nodes = json::array();
  for (const auto& n : pathway.nodes()) {
    json jn = {{"id", n.id.value}, {"kind", to_string(n.kind)}, {"text", n.text}, {"is_default", n.is_default}};
    if (n.citation_span) {
      if (n.citation_span->end > length)
        throw Error(Errc::InvalidPathway, "citation span of node '" + n.id.value + "' exceeds the article text");
      jn["citation_span"] = json::array({n.citation_span->start, n.citation_span->end});
    }
    nodes.push_back(std::move(jn));
  }
  json edges = json::array();
  for (const auto& e : pathway.edges())
    edges.push_back({{"from", e.from.value}, {"answer", to_string(e.answer)}, {"to", e.to.value}});

  json doc = {
      {"schema_version", kDocumentSchemaVersion},
      {"article", {{"id", article.id}, {"source", article.source}, {"text", article.text}}},
      {"pathway",
       {{"id", pathway.id()},
        {"origin", to_string(pathway.origin())},
        {"root", pathway.root().value},
        {"nodes", std::move(nodes)},
        {"edges", std::move(edges)}}},
  };
  try {
    return doc.dump(2, ' ', false, json::error_handler_t::strict) + "\n";
  } catch (const json::type_error& e) {
    throw Error(Errc::InvalidPathway, std::string("pathway text is not valid UTF-8: ") + e.what());
  }
}

namespace {

[[noreturn]] void malformed(const std::string& path, const std::string& what) {
  throw DocumentError(Errc::MalformedDocument, path, "malformed document at " + path + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(path + "." + key, "missing field");
  return *it;
}

std::string string_field(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) malformed(path + "." + key, "expected a string");
  return v.get<std::string>();
}

const json& object_field(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_object()) malformed(path + "." + key, "expected an object");
  return v;
}

const json& array_field(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_array()) malformed(path + "." + key, "expected an array");
  return v;
}

}  // namespace

PathwayDocument parse_pathway_document(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    malformed("$", "invalid JSON at byte " + std::to_string(e.byte));
  } catch (const std::exception& e) {
    malformed("$", e.what());
  }
  if (!doc.is_object()) malformed("$", "expected an object");
  std::string version = string_field(doc, "schema_version", "$");
  if (version != kDocumentSchemaVersion)
    throw DocumentError(Errc::UnsupportedVersion, "$.schema_version",
                        "unsupported schema version '" + version + "'");

  PathwayDocument out;
  const json& ja = object_field(doc, "article", "$");
  out.article.id = string_field(ja, "id", "$.article");
  out.article.source = string_field(ja, "source", "$.article");
  out.article.text = string_field(ja, "text", "$.article");
  if (out.article.id.empty()) malformed("$.article.id", "empty id");
  if (text::trim(out.article.text).empty()) malformed("$.article.text", "blank text");
  const std::size_t length = out.article.char_count();

  const json& jp = object_field(doc, "pathway", "$");
  PathwayDraft& d = out.draft;
  d.id = string_field(jp, "id", "$.pathway");
  d.article_id = out.article.id;
  auto origin = parse_origin(string_field(jp, "origin", "$.pathway"));
  if (!origin) malformed("$.pathway.origin", "expected \"automatic\" or \"manual\"");
  d.origin = *origin;
  d.root = NodeId(string_field(jp, "root", "$.pathway"));

  const json& nodes = array_field(jp, "nodes", "$.pathway");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "$.pathway.nodes[" + std::to_string(i) + "]";
    const json& jn = nodes[i];
    if (!jn.is_object()) malformed(path, "expected an object");
    Node n;
    n.id = NodeId(string_field(jn, "id", path));
    auto kind = parse_node_kind(string_field(jn, "kind", path));
    if (!kind) malformed(path + ".kind", "expected \"question\" or \"conclusion\"");
    n.kind = *kind;
    n.text = string_field(jn, "text", path);
    if (auto it = jn.find("is_default"); it != jn.end()) {
      if (!it->is_boolean()) malformed(path + ".is_default", "expected a boolean");
      n.is_default = it->get<bool>();
    }
    if (auto it = jn.find("citation_span"); it != jn.end() && !it->is_null()) {
      const json& span = *it;
      if (!span.is_array() || span.size() != 2 || !span[0].is_number_unsigned() || !span[1].is_number_unsigned())
        malformed(path + ".citation_span", "expected [start, end] with non-negative integers");
      CitationSpan cs{span[0].get<std::size_t>(), span[1].get<std::size_t>()};
      if (cs.start >= cs.end || cs.end > length)
        malformed(path + ".citation_span", "span must satisfy 0 <= start < end <= article length");
      n.citation_span = cs;
    }
    d.nodes.push_back(std::move(n));
  }

  const json& edges = array_field(jp, "edges", "$.pathway");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "$.pathway.edges[" + std::to_string(i) + "]";
    const json& je = edges[i];
    if (!je.is_object()) malformed(path, "expected an object");
    auto answer = parse_answer(string_field(je, "answer", path));
    if (!answer) malformed(path + ".answer", "expected \"yes\" or \"no\"");
    d.edges.push_back(Edge{NodeId(string_field(je, "from", path)), NodeId(string_field(je, "to", path)), *answer});
  }
  return out;
}

ImportedPathway import_pathway(std::string_view bytes) {
  PathwayDocument doc;
  try {
    doc = parse_pathway_document(bytes);
  } catch (const DocumentError&) {
    throw;
  } catch (const std::exception& e) {
    throw DocumentError(Errc::MalformedDocument, "$", std::string("malformed document: ") + e.what());
  }
  const std::string id = doc.draft.id;
  BuildResult built = build_pathway(std::move(doc.draft));
  if (!built.ok()) {
    std::string msg = "pathway '" + id + "' is structurally invalid:";
    for (const auto& v : built.violations) msg += " " + std::string(to_string(v.code)) + " at " + describe(v.location) + ";";
    throw DocumentError(Errc::StructurallyInvalid, "$.pathway", msg, std::move(built.violations));
  }
  return ImportedPathway{std::move(*built.pathway), std::move(doc.article)};
}

namespace {

Article article_from_json(const json& j, const std::string& origin_name) {
  auto bad = [&](const std::string& what) -> Error {
    return Error(Errc::MalformedArticle, "malformed article in '" + origin_name + "': " + what);
  };
  if (!j.is_object()) throw bad("expected an object");
  Article a;
  try {
    a.id = j.at("id").get<std::string>();
    a.source = j.value("source", std::string());
    a.text = j.at("text").get<std::string>();
    if (auto it = j.find("difficulty"); it != j.end() && !it->is_null()) {
      std::string s = it->get<std::string>();
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
      auto d = parse_difficulty(s);
      if (!d) throw bad("unknown difficulty '" + s + "'");
      a.difficulty = *d;
    }
    if (auto it = j.find("authoring_minutes"); it != j.end() && !it->is_null())
      a.authoring_minutes = it->get<double>();
  } catch (const json::exception& e) {
    throw bad(e.what());
  }
  try {
    check_article(a);
  } catch (const Error& e) {
    throw bad(e.what());
  }
  return a;
}

}  // namespace

Article parse_article(std::string_view bytes, const std::string& origin_name) {
  json j = json::parse(bytes, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::MalformedArticle, "malformed article in '" + origin_name + "': invalid JSON");
  return article_from_json(j, origin_name);
}

std::vector<Article> load_corpus(const std::filesystem::path& path) {
  std::error_code ec;
  std::vector<std::pair<Article, std::string>> loaded;
  if (std::filesystem::is_directory(path, ec)) {
    std::vector<std::filesystem::path> files;
    for (const auto& item : std::filesystem::directory_iterator(path))
      if (item.is_regular_file() && item.path().extension() == ".json") files.push_back(item.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) loaded.emplace_back(parse_article(read_file(f), f.string()), f.string());
  } else if (std::filesystem::is_regular_file(path, ec)) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw Error(Errc::MalformedArticle, "malformed article in '" + path.string() + "': invalid JSON");
    if (j.is_array()) {
      for (const auto& item : j) loaded.emplace_back(article_from_json(item, path.string()), path.string());
    } else {
      loaded.emplace_back(article_from_json(j, path.string()), path.string());
    }
  } else {
    throw Error(Errc::Io, "corpus path '" + path.string() + "' does not exist");
  }

  std::map<std::string, std::string> seen;
  for (const auto& [a, where] : loaded) {
    auto [it, inserted] = seen.emplace(a.id, where);
    if (!inserted)
      throw Error(Errc::DuplicateArticleId,
                  "article id '" + a.id + "' appears in both '" + it->second + "' and '" + where + "'");
  }
  std::vector<Article> out;
  out.reserve(loaded.size());
  for (auto& [a, _] : loaded) out.push_back(std::move(a));
  std::sort(out.begin(), out.end(), [](const Article& x, const Article& y) { return x.id < y.id; });
  return out;
}

}  // namespace pathforge
