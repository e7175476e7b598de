#include "pathforge/records.hpp"

#include <fstream>
#include <map>

#include "pathforge/io.hpp"

namespace pathforge {

json to_json(const Location& loc) {
  if (const auto* id = std::get_if<NodeId>(&loc)) return {{"node", id->value}};
  if (const auto* e = std::get_if<Edge>(&loc))
    return {{"edge", {{"from", e->from.value}, {"answer", to_string(e->answer)}, {"to", e->to.value}}}};
  return {{"pathway", true}};
}

json to_json(const ValidationError& e) {
  return {{"code", to_string(e.code)}, {"location", to_json(e.location)}, {"message", e.message}};
}

json violations_json(const std::vector<ValidationError>& violations) {
  json out = json::array();
  for (const auto& v : violations) out.push_back(to_json(v));
  return out;
}

json to_json(const LintWarning& w) {
  json j = {{"code", to_string(w.code)}, {"location", to_json(w.location)}, {"message", w.message}};
  j["score"] = w.score ? json(*w.score) : json(nullptr);
  return j;
}

json to_json(const ValidationReport& r) {
  json warnings = json::array();
  for (const auto& w : r.warnings) warnings.push_back(to_json(w));
  json grounding = json::object();
  for (const auto& [id, score] : r.grounding) grounding[id.value] = score;
  return {{"pathway_id", r.pathway_id},
          {"valid", r.is_valid()},
          {"errors", violations_json(r.errors)},
          {"warnings", std::move(warnings)},
          {"grounding", std::move(grounding)},
          {"article_coverage", r.article_coverage ? json(*r.article_coverage) : json(nullptr)}};
}

json to_json(const Article& a, bool with_text) {
  json j = {{"id", a.id},
            {"source", a.source},
            {"difficulty", to_string(a.difficulty)},
            {"char_count", a.char_count()},
            {"authoring_minutes", a.authoring_minutes ? json(*a.authoring_minutes) : json(nullptr)}};
  if (with_text) j["text"] = a.text;
  return j;
}

json to_json(const ExtractionResult& r) {
  json j = {{"article_id", r.article_id},
            {"status", to_string(r.status)},
            {"violations", violations_json(r.violations)},
            {"repair_log", r.repair_log},
            {"model_name", r.raw.model_name},
            {"request_fingerprint", r.raw.request_fingerprint},
            {"generation_seconds", r.raw.latency_seconds}};
  if (r.pathway) {
    j["pathway_id"] = r.pathway->id();
    j["node_count"] = r.pathway->nodes().size();
  } else {
    j["pathway_id"] = nullptr;
    j["node_count"] = nullptr;
  }
  j["error"] = r.error_message.empty() ? json(nullptr) : json(r.error_message);
  return j;
}

namespace {

json node_view(const Node& n) {
  return {{"id", n.id.value}, {"kind", to_string(n.kind)}, {"text", n.text}, {"is_default", n.is_default}};
}

json history_json(const std::vector<Step>& history) {
  json h = json::array();
  for (const auto& s : history) h.push_back({{"node", s.node.value}, {"answer", to_string(s.answer)}});
  return h;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::MalformedDocument, what); }

}  // namespace

json to_json(const InterviewSession& s) {
  return {{"id", s.id()},
          {"pathway_id", s.pathway_id()},
          {"status", s.status() == SessionStatus::Concluded ? "concluded" : "in_progress"},
          {"current", node_view(s.current_node())},
          {"history", history_json(s.history())},
          {"version", s.version()}};
}

json to_json(const std::vector<TraceRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back({{"question", r.question}, {"answer", to_string(r.answer)}, {"next", r.next}});
  return out;
}

json session_state(const InterviewSession& s) {
  return {{"id", s.id()}, {"pathway_id", s.pathway_id()}, {"history", history_json(s.history())}, {"version", s.version()}};
}

InterviewSession session_from_state(const json& j, std::shared_ptr<const Pathway> pathway) {
  try {
    std::vector<Step> history;
    for (const auto& step : j.at("history")) {
      auto a = parse_answer(step.at("answer").get<std::string>());
      if (!a) malformed("session history answer must be \"yes\" or \"no\"");
      history.push_back(Step{NodeId(step.at("node").get<std::string>()), *a});
    }
    return restore_session(std::move(pathway), j.at("id").get<std::string>(), std::move(history),
                           j.at("version").get<std::uint64_t>());
  } catch (const json::exception& e) {
    malformed(std::string("malformed session state: ") + e.what());
  }
}

json to_json(const StructuralMatch& m) {
  json w = json::object();
  for (const auto& [a, b] : m.witness) w[a.value] = b.value;
  return {{"matched", m.matched}, {"witness", m.matched ? w : json(nullptr)}};
}

json to_json(const ComparisonRecord& c) {
  json ratings = json::array();
  for (const auto& r : c.ratings) ratings.push_back(to_json(r));
  const auto& m = c.auto_metrics;
  return {{"article_id", c.article_id},
          {"automatic", c.automatic},
          {"manual", c.manual},
          {"auto_metrics",
           {{"grounding_mean", m.grounding_mean},
            {"article_coverage", m.article_coverage},
            {"node_count", m.node_count},
            {"generation_seconds", m.generation_seconds ? json(*m.generation_seconds) : json(nullptr)}}},
          {"structural_match", to_json(StructuralMatch{c.structural_match, c.witness})},
          {"ratings", std::move(ratings)}};
}

json to_json(const ManualRating& r) {
  return {{"pathway_id", r.pathway_id},
          {"rater_id", r.rater_id},
          {"textual_accuracy", r.textual_accuracy},
          {"completeness", r.completeness},
          {"no_hallucination", r.no_hallucination},
          {"matching", r.matching},
          {"overall", to_string(r.overall)},
          {"comments", r.comments}};
}

ManualRating rating_from_json(const json& j) {
  if (!j.is_object()) malformed("rating must be a JSON object");
  auto str = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string() || it->get<std::string>().empty())
      malformed(std::string("rating field '") + key + "' must be a non-empty string");
    return it->get<std::string>();
  };
  auto flag = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_boolean()) malformed(std::string("rating field '") + key + "' must be a boolean");
    return it->get<bool>();
  };
  ManualRating r;
  r.pathway_id = str("pathway_id");
  r.rater_id = str("rater_id");
  r.textual_accuracy = flag("textual_accuracy");
  r.completeness = flag("completeness");
  r.no_hallucination = flag("no_hallucination");
  r.matching = flag("matching");
  auto overall = parse_overall_rating(str("overall"));
  if (!overall) malformed("rating field 'overall' must be correct, slight_adjustment, starting_point or useless");
  r.overall = *overall;
  if (auto it = j.find("comments"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) malformed("rating field 'comments' must be a string");
    r.comments = it->get<std::string>();
  }
  return r;
}

json to_json(const ArticleStatsTable& t) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json rows = json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"difficulty", to_string(r.difficulty)},
                    {"n", r.n},
                    {"mean_characters", opt(r.mean_characters)},
                    {"mean_manual_minutes", opt(r.mean_manual_minutes)},
                    {"mean_automatic_seconds", opt(r.mean_automatic_seconds)},
                    {"mean_manual_nodes", opt(r.mean_manual_nodes)},
                    {"mean_automatic_nodes", opt(r.mean_automatic_nodes)},
                    {"rendered", render_stats_row(r)}});
  return {{"rows", rows}, {"text", t.render_text()}, {"csv", t.render_csv()}};
}

namespace {

json share_json(const Share& s) { return {{"count", s.count}, {"percent", s.percent()}}; }

json split_json(const PreferenceSplit& split) {
  auto s = split.shares();
  return {{"automatic", share_json(s[0])}, {"equivalent", share_json(s[1])}, {"manual", share_json(s[2])}};
}

}  // namespace

json to_json(const RatingsSummary& s) {
  json criteria = json::array();
  for (const auto& c : s.criteria)
    criteria.push_back({{"name", c.name}, {"question", c.question}, {"yes", share_json(c.yes)}, {"no", share_json(c.no)}});
  json overall = json::object();
  for (std::size_t i = 0; i < s.overall.size(); ++i)
    overall[std::string(to_string(static_cast<OverallRating>(i)))] = share_json(s.overall[i]);
  return {{"total", s.total},
          {"criteria", criteria},
          {"overall", overall},
          {"text", s.render_text()},
          {"csv", s.render_csv()}};
}

json to_json(const BlindReport& r) {
  json questions = json::array();
  for (const auto& [q, split] : r.by_question) {
    json groups = json::object();
    if (auto it = r.by_difficulty.find(q); it != r.by_difficulty.end())
      for (const auto& [d, g] : it->second) groups[std::string(to_string(d))] = split_json(g);
    questions.push_back({{"question", to_string(q)},
                         {"text", question_text(q)},
                         {"split", split_json(split)},
                         {"by_difficulty", groups}});
  }
  return {{"questions", questions}, {"text", r.render_text()}, {"csv", r.render_csv()}};
}

json blind_trial_json(const BlindTrial& t, bool reveal) {
  json responses = json::object();
  for (auto q : kBlindQuestions) {
    const auto& r = t.responses[static_cast<std::size_t>(q)];
    responses[std::string(to_string(q))] = r ? json(to_string(*r)) : json(nullptr);
  }
  json j = {{"trial_id", t.trial_id},
            {"article_id", t.article_id},
            {"responses", responses},
            {"complete", t.complete()},
            {"unblinded", t.unblinded}};
  if (reveal || t.unblinded) {
    j["assignment_seed"] = t.assignment_seed;
    j["label_a"] = t.label_a;
    j["label_b"] = t.label_b;
    j["automatic_id"] = t.automatic_id;
    j["manual_id"] = t.manual_id;
    j["unblinded_at"] = t.unblinded ? json(t.unblinded_at) : json(nullptr);
  }
  return j;
}

// ---------------------------------------------------------------------------

void append_line(const std::filesystem::path& file, const std::string& line) {
  std::error_code ec;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::Io, "cannot append to '" + file.string() + "'");
  const std::string record = line + "\n";
  out.write(record.data(), static_cast<std::streamsize>(record.size()));
  if (!out.flush()) throw Error(Errc::Io, "cannot append to '" + file.string() + "'");
}

namespace {

std::vector<json> read_records(const std::filesystem::path& file) {
  std::vector<json> out;
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) return out;
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read '" + file.string() + "'");
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw Error(Errc::MalformedDocument, file.string() + ":" + std::to_string(number) + ": invalid JSON record");
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

RatingStore::RatingStore(std::filesystem::path file) : file_(std::move(file)) {}

std::vector<ManualRating> RatingStore::load() const {
  std::lock_guard lock(mutex_);
  std::vector<ManualRating> out;
  for (const auto& j : read_records(file_)) out.push_back(rating_from_json(j));
  return out;
}

void RatingStore::add(const ManualRating& rating) {
  std::lock_guard lock(mutex_);
  for (const auto& j : read_records(file_)) {
    ManualRating existing = rating_from_json(j);
    if (existing.pathway_id == rating.pathway_id && existing.rater_id == rating.rater_id)
      throw Error(Errc::DuplicateRecord,
                  "rater '" + rating.rater_id + "' has already rated pathway '" + rating.pathway_id + "'");
  }
  append_line(file_, to_json(rating).dump());
}

TrialStore::TrialStore(std::filesystem::path file) : file_(std::move(file)) {}

namespace {

BlindTrial trial_from_json(const json& j) {
  BlindTrial t;
  t.trial_id = j.at("trial_id").get<std::string>();
  t.article_id = j.at("article_id").get<std::string>();
  t.label_a = j.at("label_a").get<std::string>();
  t.label_b = j.at("label_b").get<std::string>();
  t.assignment_seed = j.at("assignment_seed").get<std::uint64_t>();
  t.automatic_id = j.at("automatic_id").get<std::string>();
  t.manual_id = j.at("manual_id").get<std::string>();
  return t;
}

BlindQuestion question_of(const json& j) {
  auto q = parse_blind_question(j.at("question").get<std::string>());
  if (!q) malformed("unknown blind question in trial log");
  return *q;
}

Preference preference_of(const json& j) {
  auto p = parse_preference(j.at("preference").get<std::string>());
  if (!p) malformed("unknown preference in trial log");
  return *p;
}

}  // namespace

std::vector<BlindTrial> TrialStore::load_locked() const {
  std::vector<BlindTrial> trials;
  std::map<std::string, std::size_t> index;
  try {
    for (const auto& ev : read_records(file_)) {
      const std::string kind = ev.at("event").get<std::string>();
      if (kind == "create") {
        BlindTrial t = trial_from_json(ev.at("trial"));
        index[t.trial_id] = trials.size();
        trials.push_back(std::move(t));
        continue;
      }
      auto it = index.find(ev.at("trial_id").get<std::string>());
      if (it == index.end()) malformed("trial log refers to an unknown trial");
      BlindTrial& t = trials[it->second];
      if (kind == "response") {
        record_response(t, question_of(ev), preference_of(ev));
      } else if (kind == "unblind") {
        pathforge::unblind(t, ev.at("at").get<std::string>());
      } else {
        malformed("unknown trial log event '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    malformed("malformed trial log '" + file_.string() + "': " + e.what());
  }
  return trials;
}

void TrialStore::append_locked(const json& event) { append_line(file_, event.dump()); }

std::vector<BlindTrial> TrialStore::load() const {
  std::lock_guard lock(mutex_);
  return load_locked();
}

std::optional<BlindTrial> TrialStore::get(const std::string& trial_id) const {
  std::lock_guard lock(mutex_);
  for (auto& t : load_locked())
    if (t.trial_id == trial_id) return t;
  return std::nullopt;
}

BlindTrial TrialStore::create(const BlindTrial& trial) {
  std::lock_guard lock(mutex_);
  for (const auto& t : load_locked())
    if (t.trial_id == trial.trial_id) throw Error(Errc::DuplicateRecord, "trial '" + trial.trial_id + "' already exists");
  json body = {{"trial_id", trial.trial_id},       {"article_id", trial.article_id},
               {"label_a", trial.label_a},         {"label_b", trial.label_b},
               {"assignment_seed", trial.assignment_seed}, {"automatic_id", trial.automatic_id},
               {"manual_id", trial.manual_id}};
  append_locked({{"event", "create"}, {"trial", body}});
  BlindTrial fresh = trial;
  fresh.responses = {};
  fresh.unblinded = false;
  fresh.unblinded_at.clear();
  return fresh;
}

namespace {

BlindTrial& find_trial(std::vector<BlindTrial>& trials, const std::string& id) {
  for (auto& t : trials)
    if (t.trial_id == id) return t;
  throw Error(Errc::NotFound, "unknown trial '" + id + "'");
}

}  // namespace

BlindTrial TrialStore::respond(const std::string& trial_id, BlindQuestion q, Preference p) {
  std::lock_guard lock(mutex_);
  auto trials = load_locked();
  BlindTrial& t = find_trial(trials, trial_id);
  record_response(t, q, p);  // validates before anything is written
  append_locked({{"event", "response"},
                 {"trial_id", trial_id},
                 {"question", to_string(q)},
                 {"preference", to_string(p)},
                 {"at", utc_timestamp()}});
  return t;
}

BlindTrial TrialStore::unblind(const std::string& trial_id, const std::string& timestamp) {
  std::lock_guard lock(mutex_);
  auto trials = load_locked();
  BlindTrial& t = find_trial(trials, trial_id);
  if (t.unblinded) return t;
  pathforge::unblind(t, timestamp);
  append_locked({{"event", "unblind"}, {"trial_id", trial_id}, {"at", timestamp}});
  return t;
}

}  // namespace pathforge
