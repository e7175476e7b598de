#include "pathforge/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <set>
#include <thread>

#include "pathforge/engine.hpp"
#include "pathforge/evaluation.hpp"
#include "pathforge/extraction.hpp"
#include "pathforge/io.hpp"
#include "pathforge/records.hpp"
#include "pathforge/service.hpp"
#include "pathforge/validation.hpp"

namespace pathforge {

namespace {

namespace fs = std::filesystem;

struct Context {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  bool json_output = false;
  std::string config_file;

  ToolConfig config() const { return load_tool_config(config_file); }

  void emit(const json& j) const { out << j.dump(2, ' ', false, json::error_handler_t::replace) << "\n"; }
};

// A domain failure that has already been reported to the user.
std::string location_text(const Location& loc) { return describe(loc); }

void print_violations(std::ostream& os, const std::vector<ValidationError>& errors) {
  for (const auto& e : errors)
    os << "error: " << to_string(e.code) << " at " << location_text(e.location) << ": " << e.message << "\n";
}

void print_warnings(std::ostream& os, const std::vector<LintWarning>& warnings) {
  for (const auto& w : warnings) {
    os << "warning: " << to_string(w.code) << " at " << location_text(w.location);
    if (w.score) os << " (score " << format_fixed(*w.score, 2) << ")";
    os << ": " << w.message << "\n";
  }
}

Article read_article(const fs::path& file) { return parse_article(read_file(file), file.string()); }

// Documents in a directory, with generation time joined from sibling
// <id>.result.json summaries.
std::vector<Pathway> load_pathways(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(Errc::Io, "pathways directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& item : fs::directory_iterator(dir)) {
    const std::string name = item.path().filename().string();
    if (!item.is_regular_file() || item.path().extension() != ".json") continue;
    if (name.ends_with(".result.json") || name.ends_with(".meta.json")) continue;
    files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Pathway> out;
  for (const auto& f : files) {
    ImportedPathway imported = [&] {
      try {
        return import_pathway(read_file(f));
      } catch (const DocumentError& e) {
        throw Error(e.code(), f.string() + ": " + e.what());
      }
    }();
    PathwayDraft draft = imported.pathway.to_draft();
    auto summary = dir / (draft.id + ".result.json");
    if (fs::exists(summary, ec)) {
      json j = json::parse(read_file(summary), nullptr, false);
      if (j.is_object() && j.contains("generation_seconds") && j["generation_seconds"].is_number())
        draft.generation_seconds = j["generation_seconds"].get<double>();
    }
    out.push_back(build_pathway_or_throw(std::move(draft)));
  }
  return out;
}

std::optional<bool> parse_yes_no(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "y" || s == "yes" || s == "true") return true;
  if (s == "n" || s == "no" || s == "false") return false;
  return std::nullopt;
}

// --- commands ----------------------------------------------------------------

struct ExtractArgs {
  std::string input;
  std::string provider;
  std::string out_dir = "pathways";
  std::string fixtures;
  std::string replay_dir;
  std::string model;
  int parallel = 0;
  bool record = false;
};

int cmd_extract(const Context& ctx, const ExtractArgs& a) {
  ToolConfig cfg = ctx.config();
  ProviderConfig pc = cfg.provider;
  if (!a.provider.empty()) pc.kind = *parse_provider_kind(a.provider);
  if (!a.fixtures.empty()) pc.fixture_dir = a.fixtures;
  if (!a.replay_dir.empty()) pc.replay_dir = a.replay_dir;
  if (!a.model.empty()) pc.model_name = a.model;
  if (a.parallel > 0) pc.max_parallel = a.parallel;
  if (a.record) pc.record = true;

  std::vector<Article> articles = load_corpus(a.input);
  auto provider = make_provider(pc);
  auto results = extract_batch(articles, pc, *provider);

  const fs::path out_dir(a.out_dir);
  json summaries = json::array();
  std::size_t succeeded = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const std::string id = automatic_pathway_id(r.article_id);
    json summary = to_json(r);
    write_file_atomic(out_dir / (id + ".result.json"), summary.dump(2) + "\n");
    if (r.ok()) {
      ++succeeded;
      write_file_atomic(pathway_file(out_dir, id), export_pathway(*r.pathway, articles[i]));
      summary["document"] = pathway_file(out_dir, id).string();
    }
    summaries.push_back(summary);
    if (!ctx.json_output) {
      ctx.out << to_string(r.status) << " " << r.article_id;
      if (r.ok()) ctx.out << " -> " << pathway_file(out_dir, id).string() << " (" << r.pathway->nodes().size() << " nodes)";
      ctx.out << "\n";
      if (!r.ok()) {
        if (!r.error_message.empty()) ctx.err << r.article_id << ": " << r.error_message << "\n";
        print_violations(ctx.err, r.violations);
      }
    }
  }
  const std::size_t failed = results.size() - succeeded;
  if (ctx.json_output)
    ctx.emit({{"results", summaries}, {"succeeded", succeeded}, {"failed", failed}});
  else
    ctx.out << succeeded << " succeeded, " << failed << " failed\n";
  return failed == 0 ? 0 : 1;
}

int cmd_validate(const Context& ctx, const std::string& file, const std::string& article_file) {
  PathwayDocument doc = parse_pathway_document(read_file(file));
  Article article = article_file.empty() ? doc.article : read_article(article_file);
  ToolConfig cfg = ctx.config();
  ValidationReport report = make_report(doc.draft, &article, cfg.lint_config());
  print_violations(ctx.err, report.errors);
  if (ctx.json_output) {
    ctx.emit(to_json(report));
  } else {
    ctx.out << "pathway " << report.pathway_id << ": " << (report.is_valid() ? "valid" : "invalid") << " ("
            << report.errors.size() << " error(s), " << report.warnings.size() << " warning(s))\n";
    print_warnings(ctx.out, report.warnings);
  }
  return report.is_valid() ? 0 : 1;
}

int cmd_lint(const Context& ctx, const std::string& file, const std::string& article_file) {
  PathwayDocument doc = parse_pathway_document(read_file(file));
  Article article = read_article(article_file);
  ToolConfig cfg = ctx.config();
  ValidationReport report = make_report(doc.draft, &article, cfg.lint_config());
  if (!report.is_valid()) {
    print_violations(ctx.err, report.errors);
    if (ctx.json_output) ctx.emit(to_json(report));
    return 1;
  }
  if (ctx.json_output) {
    ctx.emit(to_json(report));
    return 0;
  }
  print_warnings(ctx.out, report.warnings);
  for (const auto& [id, score] : report.grounding) ctx.out << "grounding " << id.value << " " << format_fixed(score, 2) << "\n";
  ctx.out << "article coverage " << format_fixed(report.article_coverage.value_or(1.0), 2) << "\n";
  return 0;
}

int cmd_export(const Context& ctx, const std::string& file, const std::string& out_file) {
  ImportedPathway imported = import_pathway(read_file(file));
  const std::string bytes = export_pathway(imported.pathway, imported.article);
  if (out_file.empty() || out_file == "-") {
    ctx.out << bytes;
  } else {
    write_file_atomic(out_file, bytes);
    if (ctx.json_output)
      ctx.emit({{"written", out_file}, {"pathway_id", imported.pathway.id()}});
    else
      ctx.out << "wrote " << out_file << "\n";
  }
  return 0;
}

int cmd_import(const Context& ctx, const std::string& file) {
  ImportedPathway imported = import_pathway(read_file(file));
  const Pathway& p = imported.pathway;
  if (ctx.json_output) {
    ctx.emit({{"id", p.id()},
              {"article_id", p.article_id()},
              {"origin", to_string(p.origin())},
              {"root", p.root().value},
              {"node_count", p.nodes().size()},
              {"edge_count", p.edges().size()},
              {"document", json::parse(export_pathway(p, imported.article))}});
    return 0;
  }
  ctx.out << "pathway " << p.id() << " (" << to_string(p.origin()) << ") for article " << p.article_id() << "\n";
  ctx.out << p.nodes().size() << " nodes, " << p.edges().size() << " edges, root " << p.root().value << "\n";
  for (const auto& id : topological_order(p)) {
    const Node& n = p.node(id);
    ctx.out << "  " << n.id.value << " [" << to_string(n.kind) << (n.is_default ? ", default" : "") << "] " << n.text
            << "\n";
    for (const auto& [ans, to] : successors(p, id)) ctx.out << "    " << to_string(ans) << " -> " << to.value << "\n";
  }
  return 0;
}

int cmd_interview(const Context& ctx, const std::string& file) {
  ImportedPathway imported = import_pathway(read_file(file));
  auto pathway = std::make_shared<const Pathway>(std::move(imported.pathway));
  InterviewSession session = start(pathway, "cli");
  // With --json the prompts go to stderr so stdout stays machine-readable.
  std::ostream& ui = ctx.json_output ? ctx.err : ctx.out;
  while (session.status() == SessionStatus::InProgress) {
    ui << "Question: " << session.current_node().text << " [y/n/u]\n" << std::flush;
    std::string line;
    if (!std::getline(ctx.in, line)) {
      ctx.err << "error: interview ended before reaching a conclusion\n";
      return 1;
    }
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    std::string lower = line;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "u" || lower == "undo") {
      if (session.history().empty()) {
        ui << "Nothing to undo.\n";
      } else {
        session = undo(session);
      }
      continue;
    }
    if (lower == "q" || lower == "quit") {
      ctx.err << "error: interview abandoned\n";
      return 1;
    }
    auto yes = parse_yes_no(lower);
    if (!yes) {
      ui << "Please answer y, n or u.\n";
      continue;
    }
    session = answer(session, *yes ? Answer::Yes : Answer::No);
  }
  const auto rows = trace(session);
  if (ctx.json_output) {
    ctx.emit({{"conclusion", to_json(session)["current"]}, {"trace", to_json(rows)}});
    return 0;
  }
  ctx.out << "Conclusion: " << session.current_node().text << "\n";
  ctx.out << "Trace:\n";
  for (const auto& r : rows) ctx.out << "  " << r.question << " -> " << to_string(r.answer) << " -> " << r.next << "\n";
  return 0;
}

int cmd_compare(const Context& ctx, const std::string& auto_file, const std::string& manual_file, double threshold) {
  ImportedPathway a = import_pathway(read_file(auto_file));
  ImportedPathway m = import_pathway(read_file(manual_file));
  json result;
  StructuralMatch match;
  if (a.pathway.origin() == Origin::Automatic && m.pathway.origin() == Origin::Manual &&
      a.pathway.article_id() == m.pathway.article_id()) {
    ComparisonRecord rec = compare_pathways(a.article, a.pathway, m.pathway, threshold);
    match = StructuralMatch{rec.structural_match, rec.witness};
    result = to_json(rec);
  } else {
    match = structural_match(a.pathway, m.pathway, threshold);
    result = {{"structural_match", to_json(match)}};
  }
  if (ctx.json_output) {
    ctx.emit(result);
    return 0;
  }
  ctx.out << "structural match: " << (match.matched ? "yes" : "no") << "\n";
  for (const auto& [x, y] : match.witness) ctx.out << "  " << x.value << " -> " << y.value << "\n";
  if (result.contains("auto_metrics")) {
    const auto& am = result["auto_metrics"];
    ctx.out << "grounding mean " << format_fixed(am["grounding_mean"].get<double>(), 2) << ", article coverage "
            << format_fixed(am["article_coverage"].get<double>(), 2) << ", " << am["node_count"].get<std::size_t>()
            << " nodes\n";
  }
  return 0;
}

int cmd_stats(const Context& ctx, const std::string& corpus, const std::string& pathways_dir, bool csv) {
  auto articles = load_corpus(corpus);
  auto pathways = load_pathways(pathways_dir);
  ArticleStatsTable table = aggregate_article_stats(articles, pathways);
  if (ctx.json_output)
    ctx.emit(to_json(table));
  else
    ctx.out << (csv ? table.render_csv() : table.render_text());
  return 0;
}

int cmd_ratings_summarize(const Context& ctx, const std::string& file, bool csv) {
  RatingStore store(file);
  if (!fs::exists(file)) throw Error(Errc::Io, "ratings file '" + file + "' does not exist");
  auto ratings = store.load();
  RatingsSummary s = summarize_ratings(ratings);
  if (ctx.json_output)
    ctx.emit(to_json(s));
  else
    ctx.out << (csv ? s.render_csv() : s.render_text());
  return 0;
}

struct RatingArgs {
  std::string file, pathway, rater, textual_accuracy, completeness, no_hallucination, matching, overall, comments;
};

int cmd_ratings_add(const Context& ctx, const RatingArgs& a) {
  json j = {{"pathway_id", a.pathway}, {"rater_id", a.rater}, {"overall", a.overall}, {"comments", a.comments}};
  const std::pair<const char*, const std::string*> flags[] = {{"textual_accuracy", &a.textual_accuracy},
                                                              {"completeness", &a.completeness},
                                                              {"no_hallucination", &a.no_hallucination},
                                                              {"matching", &a.matching}};
  for (const auto& [key, value] : flags) {
    auto b = parse_yes_no(*value);
    if (!b) throw Error(Errc::MalformedDocument, std::string(key) + " must be yes or no");
    j[key] = *b;
  }
  ManualRating r = rating_from_json(j);
  RatingStore(a.file).add(r);
  if (ctx.json_output)
    ctx.emit(to_json(r));
  else
    ctx.out << "recorded rating of " << r.pathway_id << " by " << r.rater_id << "\n";
  return 0;
}

int cmd_blind_init(const Context& ctx, const std::string& trials_file, const std::string& pathways_dir,
                   std::optional<std::uint64_t> seed, const std::vector<std::string>& only) {
  const std::uint64_t s = seed ? *seed : ctx.config().blind_seed;
  auto pathways = load_pathways(pathways_dir);
  std::map<std::string, std::pair<std::string, std::string>> by_article;
  for (const auto& p : pathways) {
    auto& slot = by_article[p.article_id()];
    std::string& id = p.origin() == Origin::Automatic ? slot.first : slot.second;
    if (id.empty()) id = p.id();
  }
  for (const auto& a : only)
    if (!by_article.contains(a)) by_article[a];  // reported as MissingPathway below
  TrialStore store(trials_file);
  std::set<std::string> existing;
  for (const auto& t : store.load()) existing.insert(t.trial_id);
  json created = json::array();
  for (const auto& [article, ids] : by_article) {
    if (!only.empty() && std::find(only.begin(), only.end(), article) == only.end()) continue;
    const std::string trial_id = "t-" + article;
    if (existing.contains(trial_id)) continue;
    if (only.empty() && (ids.first.empty() || ids.second.empty())) continue;
    BlindTrial t = store.create(blind_pair(article, ids.first, ids.second, s, trial_id));
    created.push_back(t.trial_id);
    if (!ctx.json_output) ctx.out << "created " << t.trial_id << "\n";
  }
  if (ctx.json_output) ctx.emit({{"created", created}});
  else ctx.out << created.size() << " trial(s) created\n";
  return 0;
}

int cmd_blind_show(const Context& ctx, const std::string& trials_file, const std::string& trial_id,
                   const std::string& pathways_dir) {
  auto t = TrialStore(trials_file).get(trial_id);
  if (!t) throw Error(Errc::NotFound, "unknown trial '" + trial_id + "'");
  auto pathways = load_pathways(pathways_dir);
  const Pathway* a = nullptr;
  const Pathway* m = nullptr;
  for (const auto& p : pathways) {
    if (p.id() == t->automatic_id) a = &p;
    if (p.id() == t->manual_id) m = &p;
  }
  if (!a || !m) throw Error(Errc::MissingPathway, "trial '" + trial_id + "' refers to a missing pathway");
  ImportedPathway with_article = import_pathway(read_file(pathway_file(pathways_dir, a->id())));
  ctx.out << render_anonymized(*t, with_article.article, *a, *m);
  return 0;
}

int cmd_blind_record(const Context& ctx, const std::string& trials_file, const std::string& trial_id,
                     const std::string& question, const std::string& preference) {
  auto q = parse_blind_question(question);
  if (!q) throw Error(Errc::MalformedDocument, "question must be overall, content or logic");
  auto p = parse_preference(preference);
  if (!p) throw Error(Errc::MalformedDocument, "preference must be A, B or equivalent");
  BlindTrial t = TrialStore(trials_file).respond(trial_id, *q, *p);
  if (ctx.json_output)
    ctx.emit(blind_trial_json(t, false));
  else
    ctx.out << "recorded " << to_string(*p) << " for " << to_string(*q) << " on " << t.trial_id << "\n";
  return 0;
}

int cmd_blind_unblind(const Context& ctx, const std::string& trials_file, std::vector<std::string> ids, bool all) {
  TrialStore store(trials_file);
  if (all)
    for (const auto& t : store.load())
      if (!t.unblinded) ids.push_back(t.trial_id);
  if (ids.empty()) throw Error(Errc::NotFound, "no trials to unblind");
  json out = json::array();
  const std::string now = utc_timestamp();
  for (const auto& id : ids) {
    BlindTrial t = store.unblind(id, now);
    out.push_back(blind_trial_json(t, true));
    if (!ctx.json_output) ctx.out << "unblinded " << id << ": A = " << t.label_a << ", B = " << t.label_b << "\n";
  }
  if (ctx.json_output) ctx.emit(out);
  return 0;
}

int cmd_blind_report(const Context& ctx, const std::string& trials_file, const std::string& corpus, bool csv) {
  std::map<std::string, Difficulty> difficulty;
  if (!corpus.empty())
    for (const auto& a : load_corpus(corpus)) difficulty[a.id] = a.difficulty;
  auto trials = TrialStore(trials_file).load();
  BlindReport r = blind_report(trials, difficulty);
  if (ctx.json_output)
    ctx.emit(to_json(r));
  else
    ctx.out << (csv ? r.render_csv() : r.render_text());
  return 0;
}

int cmd_serve(const Context& ctx, const std::string& listen) {
  ToolConfig cfg = ctx.config();
  if (!listen.empty()) cfg.listen_address = listen;
  Service service(cfg);
  std::thread announce([&] {
    for (int i = 0; i < 200 && service.bound_port() == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    if (service.bound_port() > 0) {
      const std::string host = cfg.listen_address.substr(0, cfg.listen_address.rfind(':'));
      ctx.out << "listening on " << host << ":" << service.bound_port() << std::endl;
    }
  });
  try {
    service.serve();
  } catch (...) {
    announce.join();
    throw;
  }
  announce.join();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Context ctx{in, out, err};
  CLI::App app{"pathforge: legislative articles to yes/no decision pathways"};
  app.require_subcommand(1);
  app.add_flag("--json", ctx.json_output, "Machine-readable JSON on stdout");
  app.add_option("--config", ctx.config_file, "Tool configuration file (flat JSON)")->check(CLI::ExistingFile);

  std::function<int()> action;

  ExtractArgs ea;
  auto* extract = app.add_subcommand("extract", "Extract pathways from an article file or corpus directory");
  extract->add_option("input", ea.input, "Article file or corpus directory")->required()->check(CLI::ExistingPath);
  extract->add_option("--provider", ea.provider, "live, mock or replay")->check(CLI::IsMember({"live", "mock", "replay"}));
  extract->add_option("--out", ea.out_dir, "Output directory")->capture_default_str();
  extract->add_option("--fixtures", ea.fixtures, "Fixture directory for the mock provider");
  extract->add_option("--replay-dir", ea.replay_dir, "Recording directory for replay/record");
  extract->add_option("--model", ea.model, "Model name");
  extract->add_option("--parallel", ea.parallel, "Maximum requests in flight")->check(CLI::PositiveNumber);
  extract->add_flag("--record", ea.record, "Record live responses into --replay-dir");
  extract->callback([&] { action = [&] { return cmd_extract(ctx, ea); }; });

  std::string file, article_file, out_file, second_file;
  auto* validate = app.add_subcommand("validate", "Check a pathway document and print its report");
  validate->add_option("file", file, "Pathway document")->required()->check(CLI::ExistingFile);
  validate->add_option("--article", article_file, "Article to lint against (default: the embedded one)")
      ->check(CLI::ExistingFile);
  validate->callback([&] { action = [&] { return cmd_validate(ctx, file, article_file); }; });

  auto* lint_cmd = app.add_subcommand("lint", "Print heuristic warnings with scores");
  lint_cmd->add_option("file", file, "Pathway document")->required()->check(CLI::ExistingFile);
  lint_cmd->add_option("--article", article_file, "Article file")->required()->check(CLI::ExistingFile);
  lint_cmd->callback([&] { action = [&] { return cmd_lint(ctx, file, article_file); }; });

  auto* export_cmd = app.add_subcommand("export", "Rewrite a pathway document in canonical form");
  export_cmd->add_option("file", file, "Pathway document")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--out", out_file, "Output file ('-' for stdout)")->required();
  export_cmd->callback([&] { action = [&] { return cmd_export(ctx, file, out_file); }; });

  auto* import_cmd = app.add_subcommand("import", "Load a pathway document and describe it");
  import_cmd->add_option("file", file, "Pathway document")->required()->check(CLI::ExistingFile);
  import_cmd->callback([&] { action = [&] { return cmd_import(ctx, file); }; });

  auto* interview = app.add_subcommand("interview", "Run a pathway as a terminal interview (y/n, u to undo)");
  interview->add_option("file", file, "Pathway document")->required()->check(CLI::ExistingFile);
  interview->callback([&] { action = [&] { return cmd_interview(ctx, file); }; });

  double threshold = 0.5;
  auto* compare = app.add_subcommand("compare", "Structural match between an automatic and a manual pathway");
  compare->add_option("automatic", file, "First pathway document")->required()->check(CLI::ExistingFile);
  compare->add_option("manual", second_file, "Second pathway document")->required()->check(CLI::ExistingFile);
  compare->add_option("--threshold", threshold, "Dice similarity threshold")->check(CLI::Range(0.0, 1.0));
  compare->callback([&] { action = [&] { return cmd_compare(ctx, file, second_file, threshold); }; });

  bool csv = false;
  auto* stats = app.add_subcommand("stats", "Article statistics grouped by difficulty");
  stats->add_option("corpus", file, "Corpus directory or file")->required()->check(CLI::ExistingPath);
  stats->add_option("pathways", second_file, "Pathways directory")->required()->check(CLI::ExistingDirectory);
  stats->add_flag("--csv", csv, "CSV instead of an aligned table");
  stats->callback([&] { action = [&] { return cmd_stats(ctx, file, second_file, csv); }; });

  auto* ratings = app.add_subcommand("ratings", "Manual ratings");
  ratings->require_subcommand(1);
  auto* summarize = ratings->add_subcommand("summarize", "Summarize a ratings file");
  summarize->add_option("file", file, "Ratings file (JSON lines)")->required();
  summarize->add_flag("--csv", csv, "CSV instead of an aligned table");
  summarize->callback([&] { action = [&] { return cmd_ratings_summarize(ctx, file, csv); }; });

  RatingArgs ra;
  auto* add = ratings->add_subcommand("add", "Append a rating");
  add->add_option("file", ra.file, "Ratings file (JSON lines)")->required();
  add->add_option("--pathway", ra.pathway, "Rated pathway id")->required();
  add->add_option("--rater", ra.rater, "Rater id")->required();
  add->add_option("--textual-accuracy", ra.textual_accuracy, "yes or no")->required();
  add->add_option("--completeness", ra.completeness, "yes or no")->required();
  add->add_option("--no-hallucination", ra.no_hallucination, "yes or no")->required();
  add->add_option("--matching", ra.matching, "yes or no")->required();
  add->add_option("--overall", ra.overall, "correct, slight_adjustment, starting_point or useless")
      ->required()
      ->check(CLI::IsMember({"correct", "slight_adjustment", "starting_point", "useless"}));
  add->add_option("--comments", ra.comments, "Free text");
  add->callback([&] { action = [&] { return cmd_ratings_add(ctx, ra); }; });

  auto* blind = app.add_subcommand("blind", "Blind A/B comparison");
  blind->require_subcommand(1);
  std::optional<std::uint64_t> seed;
  std::vector<std::string> ids;
  std::string trial_id, question, preference;
  bool all = false;

  auto* init = blind->add_subcommand("init", "Create trials for articles with both pathways");
  init->add_option("trials", file, "Trials file (JSON lines)")->required();
  init->add_option("pathways", second_file, "Pathways directory")->required()->check(CLI::ExistingDirectory);
  init->add_option("--seed", seed, "Assignment seed (default: config blind_seed)");
  init->add_option("--article", ids, "Restrict to these article ids");
  init->callback([&] { action = [&] { return cmd_blind_init(ctx, file, second_file, seed, ids); }; });

  auto* show = blind->add_subcommand("show", "Print the anonymized view of a trial");
  show->add_option("trials", file, "Trials file")->required()->check(CLI::ExistingFile);
  show->add_option("trial", trial_id, "Trial id")->required();
  show->add_option("pathways", second_file, "Pathways directory")->required()->check(CLI::ExistingDirectory);
  show->callback([&] { action = [&] { return cmd_blind_show(ctx, file, trial_id, second_file); }; });

  auto* record = blind->add_subcommand("record", "Record a preference");
  record->add_option("trials", file, "Trials file")->required()->check(CLI::ExistingFile);
  record->add_option("trial", trial_id, "Trial id")->required();
  record->add_option("question", question, "overall, content or logic")->required();
  record->add_option("preference", preference, "A, B or equivalent")->required();
  record->callback([&] { action = [&] { return cmd_blind_record(ctx, file, trial_id, question, preference); }; });

  auto* unblind_cmd = blind->add_subcommand("unblind", "Reveal the label assignment (irreversible)");
  unblind_cmd->add_option("trials", file, "Trials file")->required()->check(CLI::ExistingFile);
  unblind_cmd->add_option("ids", ids, "Trial ids");
  unblind_cmd->add_flag("--all", all, "Unblind every remaining trial");
  unblind_cmd->callback([&] { action = [&] { return cmd_blind_unblind(ctx, file, ids, all); }; });

  auto* report = blind->add_subcommand("report", "Preference report over unblinded trials");
  report->add_option("trials", file, "Trials file")->required()->check(CLI::ExistingFile);
  report->add_option("--corpus", second_file, "Corpus, for the split by difficulty")->check(CLI::ExistingPath);
  report->add_flag("--csv", csv, "CSV instead of an aligned table");
  report->callback([&] { action = [&] { return cmd_blind_report(ctx, file, second_file, csv); }; });

  std::string listen;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--listen", listen, "host:port (overrides the config)");
  serve->callback([&] { action = [&] { return cmd_serve(ctx, listen); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    return action();
  } catch (const DocumentError& e) {
    err << "error: " << to_string(e.code()) << " at " << e.json_path() << ": " << e.what() << "\n";
    print_violations(err, e.violations());
    if (ctx.json_output)
      ctx.emit({{"error", {{"code", to_string(e.code())}, {"message", e.what()}, {"json_path", e.json_path()},
                           {"violations", violations_json(e.violations())}}}});
    return 1;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    if (ctx.json_output) ctx.emit({{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}});
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    if (ctx.json_output) ctx.emit({{"error", {{"code", "Internal"}, {"message", e.what()}}}});
    return 1;
  }
}

}  // namespace pathforge
