#include <algorithm>
#include <cctype>
#include <map>

#include <nlohmann/json.hpp>

#include "pathforge/extraction.hpp"
#include "pathforge/text.hpp"

namespace pathforge {

using nlohmann::json;

namespace {

struct Slice {
  std::string_view text;
  std::size_t base = 0;  // offset of text[0] in the original input
};

// Content of the first ``` fence; the info string on the opening line is
// dropped. An unclosed fence runs to the end of the input.
std::optional<Slice> strip_code_fence(const Slice& in) {
  auto open = in.text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto line_end = in.text.find('\n', open + 3);
  if (line_end == std::string_view::npos) return Slice{std::string_view{}, in.base + in.text.size()};
  auto body_start = line_end + 1;
  auto close = in.text.find("```", body_start);
  auto body_end = close == std::string_view::npos ? in.text.size() : close;
  return Slice{in.text.substr(body_start, body_end - body_start), in.base + body_start};
}

// Returns [begin, end) of the first balanced {...}, skipping braces inside
// string literals. On failure sets `fail_at`.
std::optional<std::pair<std::size_t, std::size_t>> first_balanced_object(std::string_view s,
                                                                         std::size_t& fail_at) {
  auto begin = s.find('{');
  if (begin == std::string_view::npos) {
    fail_at = s.size();
    return std::nullopt;
  }
  std::size_t depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = begin; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return std::make_pair(begin, i + 1);
  }
  fail_at = s.size();
  return std::nullopt;
}

std::string lower_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct SchemaError {
  std::string path;
  std::string message;
};

const json& member(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError{path + "." + key, "missing field"};
  return *it;
}

std::string string_member(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_string()) throw SchemaError{path + "." + key, "expected a string"};
  return v.get<std::string>();
}

ModelGraph map_graph(const json& doc) {
  if (!doc.is_object()) throw SchemaError{"$", "expected an object"};
  const json& blocks = member(doc, "blocks", "$");
  if (!blocks.is_array()) throw SchemaError{"$.blocks", "expected an array"};
  const json& connections = member(doc, "connections", "$");
  if (!connections.is_array()) throw SchemaError{"$.connections", "expected an array"};

  ModelGraph g;
  std::map<std::string, NodeId> renamed;
  std::size_t counter = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string path = "$.blocks[" + std::to_string(i) + "]";
    const json& b = blocks[i];
    if (!b.is_object()) throw SchemaError{path, "expected an object"};
    std::string model_id;
    const json& idv = member(b, "id", path);
    if (idv.is_string()) model_id = idv.get<std::string>();
    else if (idv.is_number_integer()) model_id = std::to_string(idv.get<long long>());
    else throw SchemaError{path + ".id", "expected a string"};
    auto type = lower_ascii(string_member(b, "type", path));
    auto kind = parse_node_kind(type);
    if (!kind) throw SchemaError{path + ".type", "expected \"question\" or \"conclusion\""};
    Node n;
    n.id = NodeId("n" + std::to_string(++counter));
    n.kind = *kind;
    n.text = text::trim(string_member(b, "text", path));
    if (auto it = b.find("default"); it != b.end() && !it->is_null()) {
      if (!it->is_boolean()) throw SchemaError{path + ".default", "expected a boolean"};
      n.is_default = it->get<bool>();
    }
    renamed.emplace(model_id, n.id);  // first occurrence wins
    g.nodes.push_back(std::move(n));
  }

  auto resolve = [&](const std::string& model_id) {
    auto it = renamed.find(model_id);
    // Unknown references stay visibly foreign so validation reports them.
    return it != renamed.end() ? it->second : NodeId("?" + model_id);
  };

  for (std::size_t i = 0; i < connections.size(); ++i) {
    const std::string path = "$.connections[" + std::to_string(i) + "]";
    const json& c = connections[i];
    if (!c.is_object()) throw SchemaError{path, "expected an object"};
    auto answer = parse_answer(lower_ascii(string_member(c, "answer", path)));
    if (!answer) throw SchemaError{path + ".answer", "expected \"yes\" or \"no\""};
    g.edges.push_back(Edge{resolve(string_member(c, "from", path)), resolve(string_member(c, "to", path)), *answer});
  }
  g.root = resolve(string_member(doc, "root", "$"));
  return g;
}

}  // namespace

ParseOutcome parse_model_json(std::string_view input) {
  ParseOutcome out;
  try {
    Slice work{input, 0};
    if (auto fenced = strip_code_fence(work)) {
      work = *fenced;
      out.repair_log.emplace_back("stripped_code_fence");
    }

    std::size_t fail_at = 0;
    auto range = first_balanced_object(work.text, fail_at);
    if (!range) {
      out.failure = ParseFailure{work.base + fail_at, work.text.find('{') == std::string_view::npos
                                                          ? "no JSON object found"
                                                          : "unterminated JSON object"};
      return out;
    }
    std::string_view candidate = work.text.substr(range->first, range->second - range->first);
    const std::size_t object_base = work.base + range->first;
    const bool has_surroundings =
        !text::trim(work.text.substr(0, range->first)).empty() || !text::trim(work.text.substr(range->second)).empty();
    if (has_surroundings) out.repair_log.emplace_back("extracted_json_object");

    json doc;
    try {
      doc = json::parse(candidate);
    } catch (const json::parse_error& e) {
      std::size_t at = e.byte == 0 ? 0 : e.byte - 1;
      out.failure = ParseFailure{object_base + std::min(at, candidate.size()), e.what()};
      return out;
    }

    try {
      out.graph = map_graph(doc);
    } catch (const SchemaError& e) {
      out.failure = ParseFailure{object_base, e.path + ": " + e.message};
    }
  } catch (const std::exception& e) {
    out.graph.reset();
    out.failure = ParseFailure{0, std::string("internal parse failure: ") + e.what()};
  }
  return out;
}

}  // namespace pathforge
