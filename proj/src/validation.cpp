#include "pathforge/validation.hpp"

#include <algorithm>
#include <deque>
#include <cstdio>
#include <set>
#include <tuple>

#include "pathforge/text.hpp"

namespace pathforge {

namespace {

ValidationError violation(ViolationCode code, Location loc, std::string message) {
  return ValidationError{code, std::move(loc), std::move(message)};
}

bool adjacency_less(const Edge& a, const Edge& b) {
  if (a.answer != b.answer) return a.answer < b.answer;
  return a.to < b.to;
}

}  // namespace

std::vector<ValidationError> validate_structure(std::span<const Node> nodes,
                                                std::span<const Edge> edges,
                                                const NodeId& root) {
  std::vector<ValidationError> out;

  std::map<NodeId, const Node*> by_id;
  for (const auto& n : nodes) {
    if (n.id.value.empty()) {
      out.push_back(violation(ViolationCode::InvalidNode, n.id, "node id is empty"));
      continue;
    }
    if (by_id.contains(n.id)) {
      out.push_back(violation(ViolationCode::InvalidNode, n.id, "duplicate node id '" + n.id.value + "'"));
      continue;
    }
    by_id.emplace(n.id, &n);
    if (text::trim(n.text).empty())
      out.push_back(violation(ViolationCode::InvalidNode, n.id, "node '" + n.id.value + "' has empty text"));
    if (n.kind == NodeKind::Question && n.is_default)
      out.push_back(violation(ViolationCode::InvalidNode, n.id,
                              "question '" + n.id.value + "' is marked as a default conclusion"));
    if (n.citation_span && n.citation_span->start >= n.citation_span->end)
      out.push_back(violation(ViolationCode::InvalidNode, n.id,
                              "node '" + n.id.value + "' has an empty citation span"));
  }

  if (by_id.size() < 2)
    out.push_back(violation(ViolationCode::TooFewNodes, std::monostate{},
                            "a pathway needs at least one question and one conclusion"));

  std::vector<Edge> valid;
  valid.reserve(edges.size());
  {
    std::set<std::tuple<NodeId, Answer, NodeId>> seen;
    for (const auto& e : edges) {
      if (!by_id.contains(e.from) || !by_id.contains(e.to)) {
        out.push_back(violation(ViolationCode::DanglingEdge, e,
                                "edge " + describe(e) + " references an unknown node"));
        continue;
      }
      if (!seen.emplace(e.from, e.answer, e.to).second) {
        out.push_back(violation(ViolationCode::DuplicateBranch, e, "edge " + describe(e) + " is repeated"));
        continue;
      }
      valid.push_back(e);
    }
  }

  const bool root_known = by_id.contains(root);
  if (!root_known) {
    out.push_back(violation(ViolationCode::DanglingEdge, root,
                            "root '" + root.value + "' is not a node of the pathway"));
  } else if (by_id.at(root)->kind == NodeKind::Conclusion) {
    out.push_back(violation(ViolationCode::RootIsConclusion, root,
                            "root '" + root.value + "' is a conclusion"));
  }

  std::map<NodeId, std::vector<Edge>> adjacency;
  std::map<NodeId, std::size_t> in_degree;
  for (const auto& [id, _] : by_id) {
    adjacency[id];
    in_degree[id] = 0;
  }
  for (const auto& e : valid) {
    adjacency[e.from].push_back(e);
    ++in_degree[e.to];
  }
  for (auto& [_, list] : adjacency) std::sort(list.begin(), list.end(), adjacency_less);

  for (const auto& [id, node] : by_id) {
    const auto& outs = adjacency[id];
    if (node->kind == NodeKind::Conclusion) {
      if (!outs.empty())
        out.push_back(violation(ViolationCode::ConclusionWithOutEdges, id,
                                "conclusion '" + id.value + "' has outgoing edges"));
      continue;
    }
    auto yes = std::count_if(outs.begin(), outs.end(), [](const Edge& e) { return e.answer == Answer::Yes; });
    auto no = static_cast<std::ptrdiff_t>(outs.size()) - yes;
    if (yes > 1 || no > 1)
      out.push_back(violation(ViolationCode::DuplicateBranch, id,
                              "question '" + id.value + "' has more than one edge for the same answer"));
    if (yes == 0 || no == 0)
      out.push_back(violation(ViolationCode::MissingBranch, id,
                              "question '" + id.value + "' lacks a " + (yes == 0 ? "yes" : "no") + " branch"));
  }

  // Iterative DFS; every back edge closes a cycle. Root is explored first so
  // the reported edge is the one pointing back toward the start.
  {
    enum class Mark { White, Gray, Black };
    std::map<NodeId, Mark> mark;
    for (const auto& [id, _] : by_id) mark[id] = Mark::White;
    std::vector<NodeId> starts;
    if (root_known) starts.push_back(root);
    for (const auto& [id, _] : by_id) starts.push_back(id);

    struct Frame {
      NodeId id;
      std::size_t next = 0;
    };
    for (const auto& s : starts) {
      if (mark[s] != Mark::White) continue;
      std::vector<Frame> stack{{s, 0}};
      mark[s] = Mark::Gray;
      while (!stack.empty()) {
        Frame& f = stack.back();
        const auto& outs = adjacency[f.id];
        if (f.next == outs.size()) {
          mark[f.id] = Mark::Black;
          stack.pop_back();
          continue;
        }
        const Edge& e = outs[f.next++];
        Mark& m = mark[e.to];
        if (m == Mark::Gray) {
          out.push_back(violation(ViolationCode::Cycle, e, "edge " + describe(e) + " closes a cycle"));
        } else if (m == Mark::White) {
          m = Mark::Gray;
          stack.push_back({e.to, 0});
        }
      }
    }
  }

  std::vector<NodeId> starts;
  if (root_known) starts.push_back(root);
  for (const auto& [id, node] : by_id) {
    if (id == root || in_degree[id] != 0 || node->kind != NodeKind::Question) continue;
    out.push_back(violation(ViolationCode::MultipleRoots, id,
                            "question '" + id.value + "' is a second starting point"));
    starts.push_back(id);
  }

  std::set<NodeId> reached;
  std::deque<NodeId> queue(starts.begin(), starts.end());
  for (const auto& s : starts) reached.insert(s);
  while (!queue.empty()) {
    NodeId id = queue.front();
    queue.pop_front();
    for (const auto& e : adjacency[id])
      if (reached.insert(e.to).second) queue.push_back(e.to);
  }
  for (const auto& [id, _] : by_id)
    if (!reached.contains(id))
      out.push_back(violation(ViolationCode::Disconnected, id,
                              "node '" + id.value + "' cannot be reached from any starting point"));

  return out;
}

Overlap grounding_overlap(std::string_view node_text, std::string_view article_text) {
  auto node_tokens = text::content_tokens(node_text);
  auto article_tokens = text::content_tokens(article_text);
  Overlap o;
  o.total = node_tokens.size();
  for (const auto& t : node_tokens)
    if (article_tokens.contains(t)) ++o.matched;
  return o;
}

double grounding_score(std::string_view node_text, std::string_view article_text) {
  if (text::trim(node_text).empty() || text::trim(article_text).empty())
    throw Error(Errc::EmptyText, "grounding_score requires non-empty texts");
  return grounding_overlap(node_text, article_text).value();
}

Overlap coverage_overlap(const Pathway& pathway, const Article& article) {
  std::set<std::string> covered;
  for (const auto& n : pathway.nodes()) covered.merge(text::content_tokens(n.text));
  auto article_tokens = text::content_tokens(article.text);
  Overlap o;
  o.total = article_tokens.size();
  for (const auto& t : article_tokens)
    if (covered.contains(t)) ++o.matched;
  return o;
}

double article_coverage(const Pathway& pathway, const Article& article) {
  return coverage_overlap(pathway, article).value();
}

std::string_view to_string(LintCode c) noexcept {
  switch (c) {
    case LintCode::PossibleDenialOfAntecedent: return "PossibleDenialOfAntecedent";
    case LintCode::UngroundedNode: return "UngroundedNode";
    case LintCode::CriterionInConclusion: return "CriterionInConclusion";
    case LintCode::LowArticleCoverage: return "LowArticleCoverage";
  }
  return "Unknown";
}

std::map<std::string, std::vector<std::string>> LintConfig::default_conditional_markers() {
  return {
      {"en", {"if", "when", "unless", "provided that"}},
      {"fr", {"si", "lorsque", "lorsqu", "quand", "sauf si", "à moins que", "à moins qu", "pourvu que",
              "pourvu qu"}},
  };
}

namespace {

std::optional<std::string> find_marker(const std::vector<std::string>& words,
                                       const std::map<std::string, std::vector<std::string>>& markers) {
  for (const auto& [_, list] : markers) {
    for (const auto& marker : list) {
      auto needle = text::words(marker);
      if (needle.empty()) continue;
      if (std::search(words.begin(), words.end(), needle.begin(), needle.end()) != words.end())
        return marker;
    }
  }
  return std::nullopt;
}

char const* fmt_score(double v, char* buf, std::size_t n) {
  std::snprintf(buf, n, "%.2f", v);
  return buf;
}

}  // namespace

std::vector<LintWarning> lint(const Pathway& pathway, const Article& article, const LintConfig& config) {
  std::vector<LintWarning> out;
  char buf[32];

  for (const auto& e : pathway.edges()) {
    if (e.answer != Answer::No) continue;
    const Node& target = pathway.node(e.to);
    if (target.kind == NodeKind::Conclusion && !target.is_default)
      out.push_back({LintCode::PossibleDenialOfAntecedent, e, std::nullopt,
                     "the absence of '" + pathway.node(e.from).text +
                         "' leads to a substantive conclusion; check for denying the antecedent"});
  }

  for (const auto& n : pathway.nodes()) {
    // Default conclusions carry boilerplate rather than article content.
    if (n.is_default) continue;
    double score = grounding_overlap(n.text, article.text).value();
    if (score < config.grounding_threshold)
      out.push_back({LintCode::UngroundedNode, n.id, score,
                     "node '" + n.id.value + "' grounding " + fmt_score(score, buf, sizeof buf) +
                         " is below the threshold"});
  }

  for (const auto& n : pathway.nodes()) {
    if (n.kind != NodeKind::Conclusion) continue;
    if (auto marker = find_marker(text::words(n.text), config.conditional_markers))
      out.push_back({LintCode::CriterionInConclusion, n.id, std::nullopt,
                     "conclusion '" + n.id.value + "' contains the conditional marker '" + *marker + "'"});
  }

  double coverage = article_coverage(pathway, article);
  if (coverage < config.coverage_threshold)
    out.push_back({LintCode::LowArticleCoverage, std::monostate{}, coverage,
                   std::string("article coverage ") + fmt_score(coverage, buf, sizeof buf) +
                       " is below the threshold"});
  return out;
}

ValidationReport make_report(const PathwayDraft& draft, const Article* article, const LintConfig& config) {
  ValidationReport report;
  report.pathway_id = draft.id;
  auto built = build_pathway(draft);
  report.errors = std::move(built.violations);
  if (!built.ok() || article == nullptr) return report;
  const Pathway& p = *built.pathway;
  report.warnings = lint(p, *article, config);
  for (const auto& n : p.nodes()) report.grounding[n.id] = grounding_overlap(n.text, article->text).value();
  report.article_coverage = article_coverage(p, *article);
  return report;
}

}  // namespace pathforge
