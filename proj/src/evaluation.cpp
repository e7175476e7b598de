#include "pathforge/evaluation.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pathforge/text.hpp"
#include "pathforge/validation.hpp"

namespace pathforge {

std::string format_fixed(double value, int digits) {
  double scale = std::pow(10.0, digits);
  // The nudge absorbs representation error such as 3.19 * 100 = 318.99999...
  double scaled = std::fabs(value) * scale;
  auto units = static_cast<long long>(std::floor(scaled + 0.5 + 1e-7));
  std::string digits_str = std::to_string(units);
  if (digits > 0) {
    if (digits_str.size() <= static_cast<std::size_t>(digits))
      digits_str.insert(0, static_cast<std::size_t>(digits) + 1 - digits_str.size(), '0');
    digits_str.insert(digits_str.size() - static_cast<std::size_t>(digits), ".");
  }
  return (value < 0 && units != 0 ? "-" : "") + digits_str;
}

std::string Share::percent() const { return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10); }

std::string Share::count_and_percent() const { return std::to_string(count) + " (" + percent() + "%)"; }

std::vector<Share> apportion(std::span<const std::size_t> counts) {
  std::vector<Share> out(counts.size());
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  for (std::size_t i = 0; i < counts.size(); ++i) out[i].count = counts[i];
  if (total == 0) return out;
  // Work in integer units of 1/total tenths to stay exact.
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder, index)
  int assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::size_t scaled = counts[i] * 1000;
    out[i].tenths = static_cast<int>(scaled / total);
    assigned += out[i].tenths;
    remainders.emplace_back(scaled % total, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t k = 0; assigned < 1000 && k < remainders.size(); ++k, ++assigned) ++out[remainders[k].second].tenths;
  return out;
}

// ---------------------------------------------------------------------------

double dice_similarity(std::string_view a, std::string_view b) {
  auto ta = text::content_tokens(a);
  auto tb = text::content_tokens(b);
  if (ta.empty() && tb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : ta)
    if (tb.contains(t)) ++common;
  return 2.0 * static_cast<double>(common) / static_cast<double>(ta.size() + tb.size());
}

namespace {

class Matcher {
 public:
  Matcher(const Pathway& a, const Pathway& b, double threshold) : a_(a), b_(b) {
    order_ = topological_order(a);  // root first; predecessors precede successors
    for (const auto& n : b.nodes()) b_ids_.push_back(n.id);
    for (const auto& u : order_) {
      for (const auto& v : b_ids_) {
        const Node& nu = a.node(u);
        const Node& nv = b.node(v);
        bool ok = nu.kind == nv.kind && (u == a.root()) == (v == b.root()) &&
                  dice_similarity(nu.text, nv.text) >= threshold;
        if (ok) candidates_[u].push_back(v);
      }
    }
    for (const auto& e : b.edges()) b_edges_.insert({e.from, e.answer, e.to});
  }

  std::optional<std::map<NodeId, NodeId>> run() {
    if (search(0)) return mapping_;
    return std::nullopt;
  }

 private:
  bool consistent(const NodeId& u, const NodeId& v) const {
    for (const auto& e : a_.edges()) {
      if (e.from == u) {
        if (e.to == u) return false;
        auto it = mapping_.find(e.to);
        if (it != mapping_.end() && !b_edges_.contains({v, e.answer, it->second})) return false;
      } else if (e.to == u) {
        auto it = mapping_.find(e.from);
        if (it != mapping_.end() && !b_edges_.contains({it->second, e.answer, v})) return false;
      }
    }
    return true;
  }

  bool search(std::size_t depth) {
    if (depth == order_.size()) return true;
    const NodeId& u = order_[depth];
    for (const auto& v : candidates_[u]) {
      if (used_.contains(v) || !consistent(u, v)) continue;
      mapping_.emplace(u, v);
      used_.insert(v);
      if (search(depth + 1)) return true;
      mapping_.erase(u);
      used_.erase(v);
    }
    return false;
  }

  const Pathway& a_;
  const Pathway& b_;
  std::vector<NodeId> order_;
  std::vector<NodeId> b_ids_;
  std::map<NodeId, std::vector<NodeId>> candidates_;
  std::set<std::tuple<NodeId, Answer, NodeId>> b_edges_;
  std::map<NodeId, NodeId> mapping_;
  std::set<NodeId> used_;
};

}  // namespace

StructuralMatch structural_match(const Pathway& a, const Pathway& b, double threshold) {
  if (a.nodes().size() > kMaxMatchNodes || b.nodes().size() > kMaxMatchNodes)
    throw Error(Errc::TooLarge, "structural_match supports at most " + std::to_string(kMaxMatchNodes) + " nodes");
  StructuralMatch result;
  if (a.nodes().size() != b.nodes().size() || a.edges().size() != b.edges().size()) return result;
  if (auto mapping = Matcher(a, b, threshold).run()) {
    result.matched = true;
    result.witness = std::move(*mapping);
  }
  return result;
}

std::string_view to_string(OverallRating r) noexcept {
  switch (r) {
    case OverallRating::Correct: return "correct";
    case OverallRating::SlightAdjustment: return "slight_adjustment";
    case OverallRating::StartingPoint: return "starting_point";
    case OverallRating::Useless: return "useless";
  }
  return "correct";
}

std::string_view label(OverallRating r) noexcept {
  switch (r) {
    case OverallRating::Correct: return "Correct";
    case OverallRating::SlightAdjustment: return "Slight Adjustment Necessary";
    case OverallRating::StartingPoint: return "Starting Point";
    case OverallRating::Useless: return "Useless";
  }
  return "Correct";
}

std::optional<OverallRating> parse_overall_rating(std::string_view s) {
  for (auto r : {OverallRating::Correct, OverallRating::SlightAdjustment, OverallRating::StartingPoint,
                 OverallRating::Useless})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

ComparisonRecord compare_pathways(const Article& article, const Pathway& automatic, const Pathway& manual,
                                  double threshold) {
  if (automatic.origin() != Origin::Automatic || manual.origin() != Origin::Manual)
    throw Error(Errc::InvalidPathway, "comparison needs one automatic and one manual pathway");
  if (automatic.article_id() != article.id || manual.article_id() != article.id)
    throw Error(Errc::InvalidPathway, "both pathways must belong to article '" + article.id + "'");
  ComparisonRecord rec;
  rec.article_id = article.id;
  rec.automatic = automatic.id();
  rec.manual = manual.id();
  double sum = 0;
  std::size_t counted = 0;
  for (const auto& n : automatic.nodes()) {
    if (n.is_default) continue;
    sum += grounding_overlap(n.text, article.text).value();
    ++counted;
  }
  rec.auto_metrics.grounding_mean = counted == 0 ? 1.0 : sum / static_cast<double>(counted);
  rec.auto_metrics.article_coverage = article_coverage(automatic, article);
  rec.auto_metrics.node_count = automatic.nodes().size();
  rec.auto_metrics.generation_seconds = automatic.generation_seconds();
  auto match = structural_match(automatic, manual, threshold);
  rec.structural_match = match.matched;
  rec.witness = std::move(match.witness);
  return rec;
}

// ---------------------------------------------------------------------------

namespace {

std::string difficulty_label(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "Easy";
    case Difficulty::Normal: return "Normal";
    case Difficulty::Hard: return "Hard";
    case Difficulty::Unrated: return "Unrated";
  }
  return "Unrated";
}

struct Mean {
  double sum = 0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> value() const {
    return n == 0 ? std::nullopt : std::optional<double>(sum / static_cast<double>(n));
  }
};

std::string cell(const std::optional<double>& v) { return v ? format_fixed(*v, 2) : std::string(); }

// Columns padded to their widest cell; first column left-aligned.
std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], text::codepoint_length(r[i]));
    }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::string pad(width[i] - text::codepoint_length(r[i]), ' ');
      if (i > 0) line += "  ";
      line += i == 0 ? r[i] + pad : pad + r[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_field(fields[i]);
  return line + "\n";
}

std::string join_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? " | " : "") + cells[i];
  return out;
}

std::vector<std::string> stats_cells(const ArticleStatsRow& r) {
  return {difficulty_label(r.difficulty),      std::to_string(r.n),           cell(r.mean_characters),
          cell(r.mean_manual_minutes),         cell(r.mean_automatic_seconds), cell(r.mean_manual_nodes),
          cell(r.mean_automatic_nodes)};
}

}  // namespace

std::string render_stats_row(const ArticleStatsRow& row) { return join_row(stats_cells(row)); }

std::string ArticleStatsTable::render_text() const {
  std::vector<std::vector<std::string>> t{{"Difficulty", "N", "Characters", "Manual time (min)",
                                           "Automatic time (s)", "Manual nodes", "Automatic nodes"}};
  for (const auto& r : rows) t.push_back(stats_cells(r));
  return aligned(t);
}

std::string ArticleStatsTable::render_csv() const {
  std::string out = csv_line({"difficulty", "n", "mean_characters", "mean_manual_minutes", "mean_automatic_seconds",
                              "mean_manual_nodes", "mean_automatic_nodes"});
  for (const auto& r : rows) {
    auto c = stats_cells(r);
    c[0] = std::string(to_string(r.difficulty));
    out += csv_line(c);
  }
  return out;
}

ArticleStatsTable aggregate_article_stats(std::span<const Article> articles, std::span<const Pathway> pathways) {
  struct Group {
    std::size_t n = 0;
    Mean chars, manual_minutes, auto_seconds, manual_nodes, auto_nodes;
  };
  std::map<Difficulty, Group> groups;
  std::map<std::string, Difficulty> difficulty_of;
  for (const auto& a : articles) {
    difficulty_of[a.id] = a.difficulty;
    Group& g = groups[a.difficulty];
    ++g.n;
    g.chars.add(static_cast<double>(a.char_count()));
    if (a.authoring_minutes) g.manual_minutes.add(*a.authoring_minutes);
  }
  for (const auto& p : pathways) {
    auto it = difficulty_of.find(p.article_id());
    if (it == difficulty_of.end())
      throw Error(Errc::UnknownArticle, "pathway '" + p.id() + "' refers to unknown article '" + p.article_id() + "'");
    Group& g = groups[it->second];
    const auto nodes = static_cast<double>(p.nodes().size());
    if (p.origin() == Origin::Automatic) {
      g.auto_nodes.add(nodes);
      if (p.generation_seconds()) g.auto_seconds.add(*p.generation_seconds());
    } else {
      g.manual_nodes.add(nodes);
    }
  }

  ArticleStatsTable table;
  for (auto d : {Difficulty::Easy, Difficulty::Normal, Difficulty::Hard, Difficulty::Unrated}) {
    const Group& g = groups[d];
    if (d == Difficulty::Unrated && g.n == 0) continue;
    table.rows.push_back(ArticleStatsRow{d, g.n, g.chars.value(), g.manual_minutes.value(), g.auto_seconds.value(),
                                         g.manual_nodes.value(), g.auto_nodes.value()});
  }
  return table;
}

// ---------------------------------------------------------------------------

RatingsSummary summarize_ratings(std::span<const ManualRating> ratings) {
  struct Criterion {
    const char* name;
    const char* question;
    bool ManualRating::*field;
  };
  static constexpr Criterion kCriteria[] = {
      {"Textual Accuracy", "Does the textual content of pathway match the content in the law?",
       &ManualRating::textual_accuracy},
      {"Completeness", "Are all logical elements from the law contained in the pathway?",
       &ManualRating::completeness},
      {"No Hallucination", "The model did not invent criteria or conclusions.", &ManualRating::no_hallucination},
      {"Matching", "Did the pathway logic perfectly match the manual pathway?", &ManualRating::matching},
  };

  RatingsSummary s;
  s.total = ratings.size();
  for (const auto& c : kCriteria) {
    std::array<std::size_t, 2> counts{};
    for (const auto& r : ratings) ++counts[r.*c.field ? 0 : 1];
    auto shares = apportion(counts);
    s.criteria.push_back(CriterionSummary{c.name, c.question, shares[0], shares[1]});
  }
  std::array<std::size_t, 4> overall{};
  for (const auto& r : ratings) ++overall[static_cast<std::size_t>(r.overall)];
  auto shares = apportion(overall);
  std::copy(shares.begin(), shares.end(), s.overall.begin());
  return s;
}

std::string RatingsSummary::render_text() const {
  std::vector<std::vector<std::string>> t{{"Criterion", "Result", "N", "%"}};
  for (const auto& c : criteria) {
    t.push_back({c.name, "Yes", std::to_string(c.yes.count), c.yes.percent()});
    t.push_back({"", "No", std::to_string(c.no.count), c.no.percent()});
  }
  for (std::size_t i = 0; i < overall.size(); ++i)
    t.push_back({i == 0 ? "Overall Rating" : "", std::string(label(static_cast<OverallRating>(i))),
                 std::to_string(overall[i].count), overall[i].percent()});
  return aligned(t);
}

std::string RatingsSummary::render_csv() const {
  std::string out = csv_line({"criterion", "result", "n", "percent"});
  for (const auto& c : criteria) {
    out += csv_line({c.name, "Yes", std::to_string(c.yes.count), c.yes.percent()});
    out += csv_line({c.name, "No", std::to_string(c.no.count), c.no.percent()});
  }
  for (std::size_t i = 0; i < overall.size(); ++i)
    out += csv_line({"Overall Rating", std::string(label(static_cast<OverallRating>(i))),
                     std::to_string(overall[i].count), overall[i].percent()});
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Preference p) noexcept {
  switch (p) {
    case Preference::A: return "A";
    case Preference::B: return "B";
    case Preference::Equivalent: return "equivalent";
  }
  return "equivalent";
}

std::string_view to_string(BlindQuestion q) noexcept {
  switch (q) {
    case BlindQuestion::Overall: return "overall";
    case BlindQuestion::Content: return "content";
    case BlindQuestion::Logic: return "logic";
  }
  return "overall";
}

std::string_view question_text(BlindQuestion q) noexcept {
  switch (q) {
    case BlindQuestion::Overall: return "Which Pathway is better overall?";
    case BlindQuestion::Content: return "Which Pathway Better Reflects the Content of the Law?";
    case BlindQuestion::Logic: return "Which Pathway Better Reflects the Logical Structure of the Law?";
  }
  return "";
}

std::optional<Preference> parse_preference(std::string_view s) {
  if (s == "A" || s == "a") return Preference::A;
  if (s == "B" || s == "b") return Preference::B;
  if (s == "equivalent" || s == "E" || s == "e" || s == "Equivalent") return Preference::Equivalent;
  return std::nullopt;
}

std::optional<BlindQuestion> parse_blind_question(std::string_view s) {
  if (s == "overall" || s == "1") return BlindQuestion::Overall;
  if (s == "content" || s == "2") return BlindQuestion::Content;
  if (s == "logic" || s == "3") return BlindQuestion::Logic;
  return std::nullopt;
}

bool BlindTrial::complete() const {
  return std::all_of(responses.begin(), responses.end(), [](const auto& r) { return r.has_value(); });
}

bool automatic_shown_first(std::uint64_t seed, std::string_view trial_id) {
  const std::string payload = std::to_string(seed) + ":" + std::string(trial_id);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha256(), nullptr);
  return (digest[0] & 1U) == 0;
}

BlindTrial blind_pair(std::string article_id, std::string automatic_id, std::string manual_id, std::uint64_t seed,
                      std::string trial_id) {
  if (automatic_id.empty() || manual_id.empty())
    throw Error(Errc::MissingPathway, "article '" + article_id + "' needs both an automatic and a manual pathway");
  BlindTrial t;
  t.trial_id = std::move(trial_id);
  t.article_id = std::move(article_id);
  t.assignment_seed = seed;
  const bool auto_first = automatic_shown_first(seed, t.trial_id);
  t.label_a = auto_first ? automatic_id : manual_id;
  t.label_b = auto_first ? manual_id : automatic_id;
  t.automatic_id = std::move(automatic_id);
  t.manual_id = std::move(manual_id);
  return t;
}

void record_response(BlindTrial& trial, BlindQuestion question, Preference preference) {
  if (trial.unblinded)
    throw Error(Errc::TrialUnblinded, "trial '" + trial.trial_id + "' has been unblinded; responses are closed");
  trial.responses[static_cast<std::size_t>(question)] = preference;
}

void unblind(BlindTrial& trial, std::string timestamp) {
  if (trial.unblinded) return;
  if (!trial.complete())
    throw Error(Errc::TrialIncomplete, "trial '" + trial.trial_id + "' still has unanswered questions");
  trial.unblinded = true;
  trial.unblinded_at = std::move(timestamp);
}

Attribution attribute(const BlindTrial& trial, BlindQuestion question) {
  const auto& r = trial.responses[static_cast<std::size_t>(question)];
  if (!trial.unblinded || !r) throw Error(Errc::TrialIncomplete, "trial '" + trial.trial_id + "' is not unblinded");
  if (*r == Preference::Equivalent) return Attribution::Equivalent;
  const std::string& chosen = *r == Preference::A ? trial.label_a : trial.label_b;
  return chosen == trial.automatic_id ? Attribution::Automatic : Attribution::Manual;
}

std::string render_anonymized(const BlindTrial& trial, const Article& article, const Pathway& automatic,
                              const Pathway& manual) {
  if (automatic.id() != trial.automatic_id || manual.id() != trial.manual_id)
    throw Error(Errc::MissingPathway, "pathways do not belong to trial '" + trial.trial_id + "'");
  auto render = [](const Pathway& p, const std::string& label) {
    std::map<NodeId, std::string> ref;
    auto order = topological_order(p);
    for (std::size_t i = 0; i < order.size(); ++i) ref[order[i]] = label + std::to_string(i + 1);
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& id : order) {
      const Node& n = p.node(id);
      blocks.push_back({{"ref", ref[id]}, {"kind", to_string(n.kind)}, {"text", n.text}, {"start", id == p.root()}});
    }
    nlohmann::json links = nlohmann::json::array();
    for (const auto& id : order)
      for (const auto& [ans, to] : successors(p, id))
        links.push_back({{"from", ref[id]}, {"answer", to_string(ans)}, {"to", ref[to]}});
    return nlohmann::json{{"blocks", blocks}, {"links", links}};
  };
  const bool auto_first = trial.label_a == trial.automatic_id;
  nlohmann::json doc = {
      {"trial", trial.trial_id},
      {"article", {{"source", article.source}, {"text", article.text}}},
      {"A", render(auto_first ? automatic : manual, "A")},
      {"B", render(auto_first ? manual : automatic, "B")},
      {"questions", nlohmann::json::array({question_text(BlindQuestion::Overall), question_text(BlindQuestion::Content),
                                           question_text(BlindQuestion::Logic)})},
  };
  return doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

std::array<Share, 3> PreferenceSplit::shares() const {
  auto v = apportion(counts);
  return {v[0], v[1], v[2]};
}

std::string render_blind_row(BlindQuestion q, const PreferenceSplit& split) {
  auto s = split.shares();
  return join_row({std::string(question_text(q)), s[0].count_and_percent(), s[1].count_and_percent(),
                   s[2].count_and_percent()});
}

std::string render_difficulty_row(Difficulty d, const PreferenceSplit& split) {
  auto s = split.shares();
  return join_row({difficulty_label(d), s[0].count_and_percent(), s[1].count_and_percent(), s[2].count_and_percent()});
}

BlindReport blind_report(std::span<const BlindTrial> trials, const std::map<std::string, Difficulty>& article_difficulty) {
  BlindReport report;
  for (auto q : kBlindQuestions) report.by_question[q];
  for (const auto& t : trials) {
    if (!t.unblinded || !t.complete())
      throw Error(Errc::TrialIncomplete, "trial '" + t.trial_id + "' is not unblinded and fully answered");
    auto it = article_difficulty.find(t.article_id);
    const Difficulty d = it == article_difficulty.end() ? Difficulty::Unrated : it->second;
    for (auto q : kBlindQuestions) {
      auto slot = static_cast<std::size_t>(attribute(t, q));
      ++report.by_question[q].counts[slot];
      ++report.by_difficulty[q][d].counts[slot];
    }
  }
  return report;
}

std::string BlindReport::render_text() const {
  std::vector<std::vector<std::string>> t{{"Question", "Automatic", "Equivalent", "Manual"}};
  for (const auto& [q, split] : by_question) {
    auto s = split.shares();
    t.push_back({std::string(question_text(q)), s[0].count_and_percent(), s[1].count_and_percent(),
                 s[2].count_and_percent()});
  }
  std::string out = aligned(t);
  for (const auto& [q, groups] : by_difficulty) {
    out += "\n" + std::string(question_text(q)) + " (by difficulty)\n";
    std::vector<std::vector<std::string>> g{{"Difficulty", "Automatic", "Equivalent", "Manual"}};
    for (const auto& [d, split] : groups) {
      auto s = split.shares();
      g.push_back({difficulty_label(d), s[0].count_and_percent(), s[1].count_and_percent(), s[2].count_and_percent()});
    }
    out += aligned(g);
  }
  return out;
}

std::string BlindReport::render_csv() const {
  std::string out = csv_line({"question", "difficulty", "automatic", "automatic_percent", "equivalent",
                              "equivalent_percent", "manual", "manual_percent"});
  auto row = [&](BlindQuestion q, const std::string& d, const PreferenceSplit& split) {
    auto s = split.shares();
    out += csv_line({std::string(to_string(q)), d, std::to_string(s[0].count), s[0].percent(),
                     std::to_string(s[1].count), s[1].percent(), std::to_string(s[2].count), s[2].percent()});
  };
  for (const auto& [q, split] : by_question) row(q, "all", split);
  for (const auto& [q, groups] : by_difficulty)
    for (const auto& [d, split] : groups) row(q, std::string(to_string(d)), split);
  return out;
}

}  // namespace pathforge
