#include "pathforge/pathway.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <unordered_set>

#include "pathforge/text.hpp"
#include "pathforge/validation.hpp"

namespace pathforge {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::InvalidArticle: return "InvalidArticle";
    case Errc::EmptyArticle: return "EmptyArticle";
    case Errc::EmptyText: return "EmptyText";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::ProviderRejected: return "ProviderRejected";
    case Errc::UnparseableResponse: return "UnparseableResponse";
    case Errc::StructurallyInvalid: return "StructurallyInvalid";
    case Errc::InvalidPathway: return "InvalidPathway";
    case Errc::SessionConcluded: return "SessionConcluded";
    case Errc::NothingToUndo: return "NothingToUndo";
    case Errc::Conflict: return "Conflict";
    case Errc::TooLarge: return "TooLarge";
    case Errc::UnknownArticle: return "UnknownArticle";
    case Errc::MissingPathway: return "MissingPathway";
    case Errc::TrialIncomplete: return "TrialIncomplete";
    case Errc::TrialUnblinded: return "TrialUnblinded";
    case Errc::DuplicateRecord: return "DuplicateRecord";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::MalformedDocument: return "MalformedDocument";
    case Errc::DuplicateArticleId: return "DuplicateArticleId";
    case Errc::MalformedArticle: return "MalformedArticle";
    case Errc::NotFound: return "NotFound";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(Difficulty d) noexcept {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Normal: return "normal";
    case Difficulty::Hard: return "hard";
    case Difficulty::Unrated: return "unrated";
  }
  return "unrated";
}

std::string_view to_string(NodeKind k) noexcept {
  return k == NodeKind::Question ? "question" : "conclusion";
}

std::string_view to_string(Answer a) noexcept { return a == Answer::Yes ? "yes" : "no"; }

std::string_view to_string(Origin o) noexcept {
  return o == Origin::Automatic ? "automatic" : "manual";
}

std::optional<Difficulty> parse_difficulty(std::string_view s) {
  if (s == "easy") return Difficulty::Easy;
  if (s == "normal") return Difficulty::Normal;
  if (s == "hard") return Difficulty::Hard;
  if (s == "unrated") return Difficulty::Unrated;
  return std::nullopt;
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
  if (s == "question") return NodeKind::Question;
  if (s == "conclusion") return NodeKind::Conclusion;
  return std::nullopt;
}

std::optional<Answer> parse_answer(std::string_view s) {
  if (s == "yes") return Answer::Yes;
  if (s == "no") return Answer::No;
  return std::nullopt;
}

std::optional<Origin> parse_origin(std::string_view s) {
  if (s == "automatic") return Origin::Automatic;
  if (s == "manual") return Origin::Manual;
  return std::nullopt;
}

std::size_t Article::char_count() const { return text::codepoint_length(text); }

void check_article(const Article& article) {
  if (article.id.empty()) throw Error(Errc::InvalidArticle, "article id is empty");
  if (text::trim(article.text).empty())
    throw Error(Errc::InvalidArticle, "article '" + article.id + "' has blank text");
  if (article.authoring_minutes && *article.authoring_minutes < 0)
    throw Error(Errc::InvalidArticle, "article '" + article.id + "' has negative authoring time");
}

bool edge_less(const Edge& a, const Edge& b) {
  if (a.from != b.from) return a.from < b.from;
  if (a.answer != b.answer) return a.answer < b.answer;
  return a.to < b.to;
}

std::string describe(const Edge& e) {
  return e.from.value + " -" + std::string(to_string(e.answer)) + "-> " + e.to.value;
}

std::string_view to_string(ViolationCode c) noexcept {
  switch (c) {
    case ViolationCode::Cycle: return "Cycle";
    case ViolationCode::MultipleRoots: return "MultipleRoots";
    case ViolationCode::Disconnected: return "Disconnected";
    case ViolationCode::MissingBranch: return "MissingBranch";
    case ViolationCode::DuplicateBranch: return "DuplicateBranch";
    case ViolationCode::ConclusionWithOutEdges: return "ConclusionWithOutEdges";
    case ViolationCode::DanglingEdge: return "DanglingEdge";
    case ViolationCode::RootIsConclusion: return "RootIsConclusion";
    case ViolationCode::TooFewNodes: return "TooFewNodes";
    case ViolationCode::InvalidNode: return "InvalidNode";
  }
  return "Unknown";
}

std::optional<ViolationCode> parse_violation_code(std::string_view s) {
  for (auto c : {ViolationCode::Cycle, ViolationCode::MultipleRoots, ViolationCode::Disconnected,
                 ViolationCode::MissingBranch, ViolationCode::DuplicateBranch,
                 ViolationCode::ConclusionWithOutEdges, ViolationCode::DanglingEdge,
                 ViolationCode::RootIsConclusion, ViolationCode::TooFewNodes,
                 ViolationCode::InvalidNode}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string describe(const Location& loc) {
  struct {
    std::string operator()(std::monostate) const { return "pathway"; }
    std::string operator()(const NodeId& n) const { return "node " + n.value; }
    std::string operator()(const Edge& e) const { return "edge " + describe(e); }
  } visitor;
  return std::visit(visitor, loc);
}

const Node* Pathway::find(const NodeId& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

const Node& Pathway::node(const NodeId& id) const {
  if (const Node* n = find(id)) return *n;
  throw Error(Errc::UnknownNode, "unknown node '" + id.value + "'");
}

std::size_t Pathway::question_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const Node& n) { return n.kind == NodeKind::Question; }));
}

PathwayDraft Pathway::to_draft() const {
  return PathwayDraft{id_, article_id_, origin_, root_, nodes_, edges_, generation_seconds_};
}

struct PathwayBuilderAccess {
  static Pathway make(PathwayDraft&& d) {
    Pathway p;
    p.id_ = std::move(d.id);
    p.article_id_ = std::move(d.article_id);
    p.origin_ = d.origin;
    p.root_ = std::move(d.root);
    p.nodes_ = std::move(d.nodes);
    p.edges_ = std::move(d.edges);
    p.generation_seconds_ = d.generation_seconds;
    std::sort(p.nodes_.begin(), p.nodes_.end(),
              [](const Node& a, const Node& b) { return a.id < b.id; });
    std::sort(p.edges_.begin(), p.edges_.end(), edge_less);
    p.yes_.resize(p.nodes_.size());
    p.no_.resize(p.nodes_.size());
    for (std::size_t i = 0; i < p.nodes_.size(); ++i) p.index_.emplace(p.nodes_[i].id, i);
    for (const auto& e : p.edges_) {
      auto i = p.index_.at(e.from);
      (e.answer == Answer::Yes ? p.yes_ : p.no_)[i] = e.to;
    }
    return p;
  }
};

namespace {

NodeId normalize_id(const NodeId& id) { return NodeId(text::to_nfc(id.value)); }

}  // namespace

BuildResult build_pathway(PathwayDraft draft) {
  draft.root = normalize_id(draft.root);
  for (auto& n : draft.nodes) n.id = normalize_id(n.id);
  for (auto& e : draft.edges) {
    e.from = normalize_id(e.from);
    e.to = normalize_id(e.to);
  }
  BuildResult result;
  result.violations = validate_structure(draft.nodes, draft.edges, draft.root);
  if (!result.violations.empty()) return result;
  result.pathway = PathwayBuilderAccess::make(std::move(draft));
  return result;
}

Pathway build_pathway_or_throw(PathwayDraft draft) {
  auto id = draft.id;
  auto r = build_pathway(std::move(draft));
  if (!r.ok()) {
    std::string msg = "pathway '" + id + "' is structurally invalid:";
    for (const auto& v : r.violations)
      msg += " " + std::string(to_string(v.code)) + " at " + describe(v.location) + ";";
    throw Error(Errc::StructurallyInvalid, msg);
  }
  return std::move(*r.pathway);
}

std::map<Answer, NodeId> successors(const Pathway& pathway, const NodeId& node) {
  auto it = pathway.index_.find(node);
  if (it == pathway.index_.end())
    throw Error(Errc::UnknownNode, "unknown node '" + node.value + "'");
  std::map<Answer, NodeId> out;
  if (const auto& y = pathway.yes_[it->second]) out.emplace(Answer::Yes, *y);
  if (const auto& n = pathway.no_[it->second]) out.emplace(Answer::No, *n);
  return out;
}

std::vector<NodeId> topological_order(std::span<const Node> nodes, std::span<const Edge> edges) {
  std::map<NodeId, std::size_t> in_degree;
  std::map<NodeId, std::vector<NodeId>> out;
  for (const auto& n : nodes) in_degree.emplace(n.id, 0);
  for (const auto& e : edges) {
    if (!in_degree.contains(e.from) || !in_degree.contains(e.to))
      throw Error(Errc::UnknownNode, "edge " + describe(e) + " references an unknown node");
    ++in_degree[e.to];
    out[e.from].push_back(e.to);
  }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (const auto& [id, deg] : in_degree)
    if (deg == 0) ready.push(id);
  std::vector<NodeId> order;
  order.reserve(in_degree.size());
  while (!ready.empty()) {
    NodeId id = ready.top();
    ready.pop();
    order.push_back(id);
    for (const auto& next : out[id])
      if (--in_degree[next] == 0) ready.push(next);
  }
  if (order.size() != in_degree.size())
    throw Error(Errc::CycleDetected, "graph contains a cycle");
  return order;
}

std::vector<NodeId> topological_order(const Pathway& pathway) {
  return topological_order(pathway.nodes(), pathway.edges());
}

bool structurally_identical(const Pathway& a, const Pathway& b) {
  return a.id() == b.id() && a.article_id() == b.article_id() && a.origin() == b.origin() &&
         a.root() == b.root() && std::ranges::equal(a.nodes(), b.nodes()) &&
         std::ranges::equal(a.edges(), b.edges());
}

}  // namespace pathforge
