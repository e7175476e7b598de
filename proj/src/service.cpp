#include "pathforge/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>

#include "pathforge/io.hpp"

namespace pathforge {

LintConfig ToolConfig::lint_config() const {
  LintConfig c;
  c.grounding_threshold = grounding_threshold;
  c.coverage_threshold = coverage_threshold;
  c.conditional_markers = conditional_markers;
  return c;
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

namespace {

[[noreturn]] void bad_config(const std::string& what) { throw Error(Errc::InvalidConfig, what); }

const char* const kConfigFields[] = {
    "provider",        "model_name",          "temperature",        "max_parallel",  "retry_limit",
    "timeout_seconds", "credentials_env_var", "endpoint_url",       "fixture_dir",   "replay_dir",
    "record",          "grounding_threshold", "coverage_threshold", "conditional_markers",
    "data_dir",        "listen_address",      "blind_seed",         "ui_dir",
};

std::string env_name(std::string field) {
  for (auto& c : field) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return "PATHFORGE_" + field;
}

// Environment values are strings; numbers, booleans and the marker table are
// given as JSON literals ("0.7", "true", {"en": [...]}).
json env_value(const std::string& field, const std::string& raw) {
  static const std::set<std::string> kStringFields = {"provider",   "model_name", "credentials_env_var",
                                                      "endpoint_url", "fixture_dir", "replay_dir",
                                                      "data_dir",   "listen_address", "ui_dir"};
  if (kStringFields.contains(field)) return raw;
  json v = json::parse(raw, nullptr, false);
  if (v.is_discarded()) bad_config(env_name(field) + " is not a valid value: '" + raw + "'");
  return v;
}

}  // namespace

ToolConfig load_tool_config(const std::filesystem::path& file, const EnvLookup& env) {
  json merged = json::object();
  std::filesystem::path base = std::filesystem::current_path();
  if (!file.empty()) {
    std::string text;
    try {
      text = read_file(file);
    } catch (const Error& e) {
      bad_config(e.what());
    }
    merged = json::parse(text, nullptr, false);
    if (merged.is_discarded() || !merged.is_object()) bad_config("config '" + file.string() + "' is not a JSON object");
    base = std::filesystem::absolute(file).parent_path();
  }
  for (auto it = merged.begin(); it != merged.end(); ++it)
    if (std::find(std::begin(kConfigFields), std::end(kConfigFields), it.key()) == std::end(kConfigFields))
      bad_config("unknown config field '" + it.key() + "'");
  std::set<std::string> from_env;
  for (const char* field : kConfigFields)
    if (auto v = env(env_name(field))) {
      merged[field] = env_value(field, *v);
      from_env.insert(field);
    }

  ToolConfig c;
  auto path_of = [&](const std::string& field, const json& v) {
    std::filesystem::path p(v.get<std::string>());
    // Env paths are relative to the working directory, file paths to the file.
    if (p.is_relative() && !from_env.contains(field)) p = base / p;
    return p;
  };
  try {
    for (auto it = merged.begin(); it != merged.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "provider") {
        auto kind = parse_provider_kind(v.get<std::string>());
        if (!kind) bad_config("provider must be live, mock or replay");
        c.provider.kind = *kind;
      } else if (k == "model_name") {
        c.provider.model_name = v.get<std::string>();
      } else if (k == "temperature") {
        c.provider.temperature = v.get<double>();
      } else if (k == "max_parallel") {
        c.provider.max_parallel = v.get<int>();
      } else if (k == "retry_limit") {
        c.provider.retry_limit = v.get<int>();
      } else if (k == "timeout_seconds") {
        c.provider.timeout_seconds = v.get<double>();
      } else if (k == "credentials_env_var") {
        c.provider.credentials_env_var = v.get<std::string>();
      } else if (k == "endpoint_url") {
        c.provider.endpoint_url = v.get<std::string>();
      } else if (k == "fixture_dir") {
        c.provider.fixture_dir = path_of(k, v);
      } else if (k == "replay_dir") {
        c.provider.replay_dir = path_of(k, v);
      } else if (k == "record") {
        c.provider.record = v.get<bool>();
      } else if (k == "grounding_threshold") {
        c.grounding_threshold = v.get<double>();
      } else if (k == "coverage_threshold") {
        c.coverage_threshold = v.get<double>();
      } else if (k == "conditional_markers") {
        c.conditional_markers = v.get<std::map<std::string, std::vector<std::string>>>();
      } else if (k == "data_dir") {
        c.data_dir = path_of(k, v);
      } else if (k == "listen_address") {
        c.listen_address = v.get<std::string>();
      } else if (k == "blind_seed") {
        c.blind_seed = v.get<std::uint64_t>();
      } else if (k == "ui_dir") {
        c.ui_dir = path_of(k, v);
      }
    }
  } catch (const json::exception& e) {
    bad_config(std::string("config field has the wrong type: ") + e.what());
  }
  if (c.data_dir.is_relative()) c.data_dir = base / c.data_dir;
  return c;
}

void check_tool_config(const ToolConfig& c) {
  if (!(c.grounding_threshold >= 0.0 && c.grounding_threshold <= 1.0))
    bad_config("grounding_threshold must lie in [0, 1]");
  if (!(c.coverage_threshold >= 0.0 && c.coverage_threshold <= 1.0))
    bad_config("coverage_threshold must lie in [0, 1]");
  check_provider_config(c.provider);
  auto colon = c.listen_address.rfind(':');
  if (colon == std::string::npos || colon + 1 == c.listen_address.size())
    bad_config("listen_address must be host:port");
  try {
    int port = std::stoi(c.listen_address.substr(colon + 1));
    if (port < 0 || port > 65535) bad_config("listen_address port out of range");
  } catch (const std::logic_error&) {
    bad_config("listen_address port is not a number");
  }
  std::error_code ec;
  std::filesystem::create_directories(c.data_dir, ec);
  if (ec) bad_config("cannot create data_dir '" + c.data_dir.string() + "': " + ec.message());
  const auto probe = c.data_dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok")) bad_config("data_dir '" + c.data_dir.string() + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
}

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::NotFound:
    case Errc::UnknownArticle:
    case Errc::MissingPathway:
      return 404;
    case Errc::Conflict:
    case Errc::DuplicateRecord:
    case Errc::TrialIncomplete:
    case Errc::TrialUnblinded:
    case Errc::SessionConcluded:
    case Errc::NothingToUndo:
      return 409;
    case Errc::StructurallyInvalid:
    case Errc::InvalidPathway:
    case Errc::UnparseableResponse:
      return 422;
    case Errc::ProviderUnavailable:
    case Errc::ProviderRejected:
      return 502;
    case Errc::Io:
    case Errc::InvalidConfig:
      return 500;
    default:
      return 400;
  }
}

std::filesystem::path pathway_file(const std::filesystem::path& dir, const std::string& pathway_id) {
  return dir / (pathway_id + ".json");
}

namespace {

// Domain error carrying structured details for the response body.
class ApiError : public Error {
 public:
  ApiError(Errc code, const std::string& message, json details = nullptr)
      : Error(code, message), details_(std::move(details)) {}
  const json& details() const noexcept { return details_; }

 private:
  json details_;
};

HttpResponse reply(int status, const json& body) {
  return HttpResponse{status, body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json"};
}

HttpResponse ok(json data, int status = 200) { return reply(status, {{"ok", true}, {"data", std::move(data)}}); }

HttpResponse fail(int status, std::string_view code, const std::string& message, json details = nullptr) {
  json error = {{"code", code}, {"message", message}};
  if (!details.is_null()) error["details"] = std::move(details);
  return reply(status, {{"ok", false}, {"error", std::move(error)}});
}

// Ids become file names, so keep them to a conservative character set.
void check_id(const std::string& id, const char* what) {
  bool good = !id.empty() && id.size() <= 200 && id.front() != '.';
  for (unsigned char c : id) good = good && (std::isalnum(c) || c == '.' || c == '_' || c == '-');
  if (!good) throw Error(Errc::NotFound, std::string("unknown ") + what + " '" + id + "'");
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    auto j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    parts.push_back(httplib::detail::decode_url(path.substr(i, j - i), false));
    i = j;
  }
  return parts;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::MalformedDocument, "request body must be a JSON object");
  return j;
}

std::string string_member(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string())
    throw Error(Errc::MalformedDocument, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::uint64_t version_member(const json& body) {
  auto it = body.find("version");
  if (it == body.end() || !it->is_number_unsigned())
    throw Error(Errc::MalformedDocument, "field 'version' must be a non-negative integer");
  return it->get<std::uint64_t>();
}

bool is_document_file(const std::filesystem::path& p) {
  const std::string name = p.filename().string();
  auto ends_with = [&](std::string_view s) { return name.size() >= s.size() && name.ends_with(s); };
  return p.extension() == ".json" && !ends_with(".meta.json") && !ends_with(".result.json");
}

std::string random_id(const char* prefix) {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  static const char* hex = "0123456789abcdef";
  std::string id = prefix;
  for (int i = 0; i < 12; ++i) id += hex[rng() % 16];
  return id;
}

}  // namespace

Service::Service(ToolConfig config, std::shared_ptr<Provider> provider)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      ratings_(config_.data_dir / "ratings.jsonl"),
      trials_(config_.data_dir / "trials.jsonl") {
  check_tool_config(config_);
  if (!provider_) provider_ = make_provider(config_.provider);
}

HttpResponse Service::handle(const HttpRequest& request) {
  try {
    return route(request);
  } catch (const ApiError& e) {
    return fail(http_status(e.code()), to_string(e.code()), e.what(), e.details());
  } catch (const DocumentError& e) {
    json details = {{"json_path", e.json_path()}};
    if (!e.violations().empty()) details["violations"] = violations_json(e.violations());
    return fail(http_status(e.code()), to_string(e.code()), e.what(), std::move(details));
  } catch (const Error& e) {
    return fail(http_status(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(400, "MalformedDocument", e.what());
  } catch (const std::exception& e) {
    return fail(500, "Internal", e.what());
  }
}

HttpResponse Service::route(const HttpRequest& req) {
  const auto p = split_path(req.path);
  const std::string& m = req.method;
  auto is = [&](std::initializer_list<std::string_view> shape) {
    if (p.size() != shape.size()) return false;
    std::size_t i = 0;
    for (auto s : shape) {
      if (s != "*" && p[i] != s) return false;
      ++i;
    }
    return true;
  };

  if (p.empty() || p[0] != "api") {
    if (m == "GET")
      if (auto r = static_file(req.path)) return *r;
    return fail(404, "NotFound", "no route for " + m + " " + req.path);
  }

  auto method_not_allowed = [&] { return fail(405, "MethodNotAllowed", m + " is not supported on " + req.path); };

  if (is({"api", "articles"})) return m == "GET" ? ok(list_articles()) : method_not_allowed();
  if (is({"api", "articles", "*"})) return m == "GET" ? ok(get_article(p[2])) : method_not_allowed();
  if (is({"api", "extract"})) return m == "POST" ? post_extract(parse_body(req.body)) : method_not_allowed();
  if (is({"api", "pathways"})) return m == "GET" ? ok(list_pathways()) : method_not_allowed();
  if (is({"api", "pathways", "*"})) {
    if (m == "GET") return ok(get_pathway(p[2]));
    if (m == "PUT") return ok(put_pathway(p[2], parse_body(req.body)));
    return method_not_allowed();
  }
  if (is({"api", "pathways", "*", "validate"}))
    return m == "POST" ? ok(validate_pathway(p[2], parse_body(req.body))) : method_not_allowed();
  if (is({"api", "sessions"})) return m == "POST" ? ok(create_session(parse_body(req.body)), 201) : method_not_allowed();
  if (is({"api", "sessions", "*"})) return m == "GET" ? ok(get_session(p[2])) : method_not_allowed();
  if (is({"api", "sessions", "*", "answer"}))
    return m == "POST" ? ok(session_step(p[2], parse_body(req.body), false)) : method_not_allowed();
  if (is({"api", "sessions", "*", "undo"}))
    return m == "POST" ? ok(session_step(p[2], parse_body(req.body), true)) : method_not_allowed();
  if (is({"api", "sessions", "*", "trace"})) return m == "GET" ? ok(session_trace(p[2])) : method_not_allowed();
  if (is({"api", "ratings"})) return m == "POST" ? ok(post_rating(parse_body(req.body)), 201) : method_not_allowed();
  if (is({"api", "reports", "ratings"})) return m == "GET" ? ok(ratings_report()) : method_not_allowed();
  if (is({"api", "blind", "trials"}))
    return m == "POST" ? ok(create_trial(parse_body(req.body)), 201) : method_not_allowed();
  if (is({"api", "blind", "trials", "*"})) return m == "GET" ? ok(get_trial(p[3])) : method_not_allowed();
  if (is({"api", "blind", "trials", "*", "response"}))
    return m == "POST" ? ok(trial_response(p[3], parse_body(req.body))) : method_not_allowed();
  if (is({"api", "blind", "unblind"})) return m == "POST" ? ok(unblind_trial(parse_body(req.body))) : method_not_allowed();
  if (is({"api", "reports", "blind"})) return m == "GET" ? ok(blind_report_json()) : method_not_allowed();
  return fail(404, "NotFound", "no route for " + m + " " + req.path);
}

// --- articles --------------------------------------------------------------

std::vector<Article> Service::articles() const {
  std::error_code ec;
  if (!std::filesystem::is_directory(articles_dir(), ec)) return {};
  return load_corpus(articles_dir());
}

json Service::list_articles() const {
  json out = json::array();
  for (const auto& a : articles()) out.push_back(to_json(a, false));
  return out;
}

json Service::get_article(const std::string& id) const {
  for (const auto& a : articles())
    if (a.id == id) return to_json(a, true);
  throw Error(Errc::NotFound, "unknown article '" + id + "'");
}

// --- pathways --------------------------------------------------------------

std::shared_ptr<Service::PathwaySlot> Service::pathway_slot(const std::string& id) {
  check_id(id, "pathway");
  std::lock_guard lock(slots_mutex_);
  auto& slot = pathways_[id];
  if (!slot) slot = std::make_shared<PathwaySlot>();
  return slot;
}

std::shared_ptr<const Service::StoredPathway> Service::stored_pathway(const std::string& id) {
  auto slot = pathway_slot(id);
  std::lock_guard lock(slot->write);
  if (!slot->current) {
    const auto file = pathway_file(pathways_dir(), id);
    std::error_code ec;
    if (!std::filesystem::exists(file, ec)) return nullptr;
    ImportedPathway imported = import_pathway(read_file(file));
    std::uint64_t version = 1;
    const auto meta = pathways_dir() / (id + ".meta.json");
    if (std::filesystem::exists(meta, ec)) {
      json j = json::parse(read_file(meta), nullptr, false);
      if (j.is_object() && j.contains("version") && j["version"].is_number_unsigned())
        version = j["version"].get<std::uint64_t>();
    }
    auto stored = std::make_shared<StoredPathway>();
    stored->pathway = std::make_shared<const Pathway>(std::move(imported.pathway));
    stored->article = std::move(imported.article);
    stored->version = version;
    slot->current = stored;
  }
  return slot->current;
}

void Service::store_pathway(PathwaySlot& slot, const std::string& id, Pathway pathway, Article article,
                            std::uint64_t version) {
  const std::string doc = export_pathway(pathway, article);
  write_file_atomic(pathway_file(pathways_dir(), id), doc);
  write_file_atomic(pathways_dir() / (id + ".meta.json"), json{{"version", version}}.dump() + "\n");
  auto stored = std::make_shared<StoredPathway>();
  stored->pathway = std::make_shared<const Pathway>(std::move(pathway));
  stored->article = std::move(article);
  stored->version = version;
  slot.current = stored;
}

json Service::list_pathways() {
  json out = json::array();
  std::error_code ec;
  if (!std::filesystem::is_directory(pathways_dir(), ec)) return out;
  std::vector<std::string> ids;
  for (const auto& item : std::filesystem::directory_iterator(pathways_dir()))
    if (item.is_regular_file() && is_document_file(item.path())) ids.push_back(item.path().stem().string());
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    std::shared_ptr<const StoredPathway> s;
    try {
      s = stored_pathway(id);
    } catch (const Error&) {
      continue;  // unreadable files are skipped rather than failing the listing
    }
    if (!s) continue;
    out.push_back({{"id", id},
                   {"article_id", s->pathway->article_id()},
                   {"origin", to_string(s->pathway->origin())},
                   {"node_count", s->pathway->nodes().size()},
                   {"version", s->version}});
  }
  return out;
}

json Service::get_pathway(const std::string& id) {
  auto s = stored_pathway(id);
  if (!s) throw Error(Errc::NotFound, "unknown pathway '" + id + "'");
  ValidationReport report = make_report(s->pathway->to_draft(), &s->article, config_.lint_config());
  return {{"id", id},
          {"version", s->version},
          {"document", json::parse(export_pathway(*s->pathway, s->article))},
          {"report", to_json(report)}};
}

json Service::put_pathway(const std::string& id, const json& body) {
  const std::uint64_t expected = version_member(body);
  auto doc_it = body.find("document");
  if (doc_it == body.end() || !(doc_it->is_object() || doc_it->is_string()))
    throw Error(Errc::MalformedDocument, "field 'document' must be a pathway document");
  const std::string text = doc_it->is_string() ? doc_it->get<std::string>() : doc_it->dump();

  PathwayDocument parsed = parse_pathway_document(text);
  if (parsed.draft.id != id)
    throw Error(Errc::MalformedDocument,
                "document pathway id '" + parsed.draft.id + "' does not match '" + id + "'");
  BuildResult built = build_pathway(parsed.draft);
  if (!built.ok()) {
    ValidationReport report = make_report(parsed.draft, &parsed.article, config_.lint_config());
    throw ApiError(Errc::StructurallyInvalid,
                   "pathway '" + id + "' is structurally invalid (" + std::to_string(built.violations.size()) +
                       " violation(s))",
                   {{"violations", violations_json(built.violations)}, {"report", to_json(report)}});
  }
  // Catch export failures (span overflow, invalid UTF-8) before touching disk.
  export_pathway(*built.pathway, parsed.article);

  stored_pathway(id);  // load from disk if present
  auto slot = pathway_slot(id);
  std::lock_guard lock(slot->write);
  const std::uint64_t current = slot->current ? slot->current->version : 0;
  if (expected != current)
    throw ApiError(Errc::Conflict,
                   "pathway '" + id + "' is at version " + std::to_string(current) + ", not " +
                       std::to_string(expected),
                   {{"current_version", current}});
  store_pathway(*slot, id, std::move(*built.pathway), parsed.article, current + 1);
  const auto& s = slot->current;
  ValidationReport report = make_report(s->pathway->to_draft(), &s->article, config_.lint_config());
  return {{"id", id},
          {"version", s->version},
          {"document", json::parse(export_pathway(*s->pathway, s->article))},
          {"report", to_json(report)}};
}

json Service::validate_pathway(const std::string& id, const json& body) {
  // An optional draft document is validated as-is without being stored.
  if (auto it = body.find("document"); it != body.end()) {
    const std::string text = it->is_string() ? it->get<std::string>() : it->dump();
    PathwayDocument parsed = parse_pathway_document(text);
    return to_json(make_report(parsed.draft, &parsed.article, config_.lint_config()));
  }
  auto s = stored_pathway(id);
  if (!s) throw Error(Errc::NotFound, "unknown pathway '" + id + "'");
  return to_json(make_report(s->pathway->to_draft(), &s->article, config_.lint_config()));
}

HttpResponse Service::post_extract(const json& body) {
  const std::string article_id = string_member(body, "article_id");
  std::optional<Article> article;
  for (auto& a : articles())
    if (a.id == article_id) article = std::move(a);
  if (!article) throw Error(Errc::NotFound, "unknown article '" + article_id + "'");

  ExtractionResult result = extract(*article, config_.provider, *provider_);
  json summary = to_json(result);
  switch (result.status) {
    case ExtractionStatus::Ok:
      break;
    case ExtractionStatus::UnparseableResponse:
      throw ApiError(Errc::UnparseableResponse, result.error_message, {{"result", summary}});
    case ExtractionStatus::StructurallyInvalid:
      throw ApiError(Errc::StructurallyInvalid, result.error_message, {{"result", summary}});
    default:
      throw ApiError(Errc::ProviderUnavailable, result.error_message, {{"result", summary}});
  }
  const std::string id = result.pathway->id();
  stored_pathway(id);
  auto slot = pathway_slot(id);
  std::lock_guard lock(slot->write);
  const std::uint64_t version = (slot->current ? slot->current->version : 0) + 1;
  write_file_atomic(pathways_dir() / (id + ".result.json"), summary.dump(2) + "\n");
  store_pathway(*slot, id, std::move(*result.pathway), *article, version);
  return ok({{"result", summary},
             {"pathway_id", id},
             {"version", version},
             {"document", json::parse(export_pathway(*slot->current->pathway, *article))}});
}

// --- sessions --------------------------------------------------------------

std::shared_ptr<Service::SessionSlot> Service::session_slot(const std::string& id) {
  check_id(id, "session");
  std::shared_ptr<SessionSlot> slot;
  {
    std::lock_guard lock(slots_mutex_);
    auto& s = sessions_[id];
    if (!s) s = std::make_shared<SessionSlot>();
    slot = s;
  }
  std::lock_guard lock(slot->write);
  if (!slot->current) {
    const auto file = sessions_dir() / (id + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(file, ec)) throw Error(Errc::NotFound, "unknown session '" + id + "'");
    json state = json::parse(read_file(file), nullptr, false);
    if (state.is_discarded()) throw Error(Errc::Io, "corrupt session file '" + file.string() + "'");
    auto stored = stored_pathway(state.value("pathway_id", std::string()));
    if (!stored) throw Error(Errc::NotFound, "session '" + id + "' refers to a missing pathway");
    slot->current = std::make_shared<const InterviewSession>(session_from_state(state, stored->pathway));
  }
  return slot;
}

json Service::create_session(const json& body) {
  const std::string pathway_id = string_member(body, "pathway_id");
  auto stored = stored_pathway(pathway_id);
  if (!stored) throw Error(Errc::NotFound, "unknown pathway '" + pathway_id + "'");
  const std::string id = random_id("s-") + std::to_string(++session_counter_);
  InterviewSession session = start(stored->pathway, id);
  write_file_atomic(sessions_dir() / (id + ".json"), session_state(session).dump(2) + "\n");
  auto slot = std::make_shared<SessionSlot>();
  slot->current = std::make_shared<const InterviewSession>(session);
  {
    std::lock_guard lock(slots_mutex_);
    sessions_[id] = slot;
  }
  return to_json(session);
}

json Service::get_session(const std::string& id) {
  auto slot = session_slot(id);
  std::lock_guard lock(slot->write);
  return to_json(*slot->current);
}

json Service::session_step(const std::string& id, const json& body, bool is_undo) {
  const std::uint64_t expected = version_member(body);
  std::optional<Answer> a;
  if (!is_undo) {
    a = parse_answer(string_member(body, "answer"));
    if (!a) throw Error(Errc::MalformedDocument, "field 'answer' must be \"yes\" or \"no\"");
  }
  auto slot = session_slot(id);
  std::lock_guard lock(slot->write);
  const InterviewSession& current = *slot->current;
  if (current.version() != expected)
    throw ApiError(Errc::Conflict,
                   "session '" + id + "' is at version " + std::to_string(current.version()) + ", not " +
                       std::to_string(expected),
                   {{"current_version", current.version()}});
  InterviewSession next = is_undo ? undo(current) : answer(current, *a);
  write_file_atomic(sessions_dir() / (id + ".json"), session_state(next).dump(2) + "\n");
  slot->current = std::make_shared<const InterviewSession>(std::move(next));
  return to_json(*slot->current);
}

json Service::session_trace(const std::string& id) {
  auto slot = session_slot(id);
  std::shared_ptr<const InterviewSession> s;
  {
    std::lock_guard lock(slot->write);
    s = slot->current;
  }
  return {{"session", to_json(*s)}, {"trace", to_json(trace(*s))}};
}

// --- ratings and blind trials ---------------------------------------------

json Service::post_rating(const json& body) {
  ManualRating r = rating_from_json(body);
  if (!stored_pathway(r.pathway_id)) throw Error(Errc::NotFound, "unknown pathway '" + r.pathway_id + "'");
  ratings_.add(r);
  return to_json(r);
}

json Service::ratings_report() const {
  auto ratings = ratings_.load();
  return to_json(summarize_ratings(ratings));
}

json Service::create_trial(const json& body) {
  const std::string article_id = string_member(body, "article_id");
  std::string trial_id = body.contains("trial_id") ? string_member(body, "trial_id") : "t-" + article_id;
  check_id(trial_id, "trial");
  std::string auto_id, manual_id;
  for (const auto& entry : list_pathways()) {
    if (entry["article_id"] != article_id) continue;
    std::string& slot = entry["origin"] == "automatic" ? auto_id : manual_id;
    if (slot.empty()) slot = entry["id"].get<std::string>();
  }
  BlindTrial trial = trials_.create(blind_pair(article_id, auto_id, manual_id, config_.blind_seed, trial_id));
  return get_trial(trial.trial_id);
}

json Service::get_trial(const std::string& id) const {
  auto t = trials_.get(id);
  if (!t) throw Error(Errc::NotFound, "unknown trial '" + id + "'");
  json out = blind_trial_json(*t, false);
  auto self = const_cast<Service*>(this);
  auto a = self->stored_pathway(t->automatic_id);
  auto m = self->stored_pathway(t->manual_id);
  if (!a || !m) throw Error(Errc::MissingPathway, "trial '" + id + "' refers to a missing pathway");
  out["view"] = json::parse(render_anonymized(*t, a->article, *a->pathway, *m->pathway));
  return out;
}

json Service::trial_response(const std::string& id, const json& body) {
  auto q = parse_blind_question(string_member(body, "question"));
  if (!q) throw Error(Errc::MalformedDocument, "field 'question' must be overall, content or logic");
  auto p = parse_preference(string_member(body, "preference"));
  if (!p) throw Error(Errc::MalformedDocument, "field 'preference' must be A, B or equivalent");
  return blind_trial_json(trials_.respond(id, *q, *p), false);
}

json Service::unblind_trial(const json& body) {
  const std::string id = string_member(body, "trial_id");
  return blind_trial_json(trials_.unblind(id, utc_timestamp()), true);
}

json Service::blind_report_json() const {
  std::map<std::string, Difficulty> difficulty;
  for (const auto& a : articles()) difficulty[a.id] = a.difficulty;
  auto trials = trials_.load();
  return to_json(blind_report(trials, difficulty));
}

// --- static files and serving -----------------------------------------------

std::optional<HttpResponse> Service::static_file(const std::string& path) const {
  if (config_.ui_dir.empty()) return std::nullopt;
  std::string rel = path == "/" ? "index.html" : path.substr(1);
  if (rel.find("..") != std::string::npos) return std::nullopt;
  const auto file = config_.ui_dir / rel;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(file, ec)) return std::nullopt;
  const std::string ext = file.extension().string();
  std::string type = "application/octet-stream";
  if (ext == ".html") type = "text/html; charset=utf-8";
  else if (ext == ".js") type = "text/javascript";
  else if (ext == ".css") type = "text/css";
  else if (ext == ".json") type = "application/json";
  else if (ext == ".svg") type = "image/svg+xml";
  return HttpResponse{200, read_file(file), type};
}

void Service::serve() {
  httplib::Server server;
  auto adapter = [this](const httplib::Request& req, httplib::Response& res) {
    HttpResponse r = handle(HttpRequest{req.method, req.path, req.body});
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get(".*", adapter);
  server.Post(".*", adapter);
  server.Put(".*", adapter);
  server.Delete(".*", adapter);
  server.Patch(".*", adapter);

  const auto colon = config_.listen_address.rfind(':');
  const std::string host = config_.listen_address.substr(0, colon);
  const int port = std::stoi(config_.listen_address.substr(colon + 1));
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(Errc::Io, "cannot listen on " + config_.listen_address);
  {
    std::lock_guard lock(server_mutex_);
    stop_server_ = [&server] { server.stop(); };
  }
  bound_port_ = bound;
  server.listen_after_bind();
  std::lock_guard lock(server_mutex_);
  stop_server_ = nullptr;
  bound_port_ = 0;
}

void Service::stop() {
  std::lock_guard lock(server_mutex_);
  if (stop_server_) stop_server_();
}

}  // namespace pathforge
