#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "pathforge/errors.hpp"

namespace pathforge {

enum class Difficulty { Easy, Normal, Hard, Unrated };
enum class NodeKind { Question, Conclusion };
enum class Answer { Yes, No };
enum class Origin { Automatic, Manual };

std::string_view to_string(Difficulty d) noexcept;
std::string_view to_string(NodeKind k) noexcept;
std::string_view to_string(Answer a) noexcept;
std::string_view to_string(Origin o) noexcept;

// Lowercase wire names ("question", "yes", "automatic", "easy").
std::optional<Difficulty> parse_difficulty(std::string_view s);
std::optional<NodeKind> parse_node_kind(std::string_view s);
std::optional<Answer> parse_answer(std::string_view s);
std::optional<Origin> parse_origin(std::string_view s);

/// A legislative text unit. `char_count()` is measured in Unicode code points.
struct Article {
  std::string id;
  std::string source;
  std::string text;
  Difficulty difficulty = Difficulty::Unrated;
  std::optional<double> authoring_minutes;

  std::size_t char_count() const;
};

// Throws Error{InvalidArticle} when the text is blank, the id is empty or
// authoring_minutes is negative.
void check_article(const Article& article);

struct NodeId {
  std::string value;

  NodeId() = default;
  explicit NodeId(std::string v) : value(std::move(v)) {}

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
  friend bool operator==(const NodeId&, const NodeId&) = default;
};

struct NodeIdHash {
  std::size_t operator()(const NodeId& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};

/// Half-open range of code points into the article text.
struct CitationSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const CitationSpan&, const CitationSpan&) = default;
};

struct Node {
  NodeId id;
  NodeKind kind = NodeKind::Question;
  std::string text;
  bool is_default = false;
  std::optional<CitationSpan> citation_span;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  NodeId from;
  NodeId to;
  Answer answer = Answer::Yes;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Canonical edge order: (from, answer, to).
bool edge_less(const Edge& a, const Edge& b);

std::string describe(const Edge& e);

enum class ViolationCode {
  Cycle,
  MultipleRoots,
  Disconnected,
  MissingBranch,
  DuplicateBranch,
  ConclusionWithOutEdges,
  DanglingEdge,
  RootIsConclusion,
  TooFewNodes,
  // Node-level constraints (empty id/text, duplicate id, default flag on a
  // question, empty citation span).
  InvalidNode,
};

std::string_view to_string(ViolationCode c) noexcept;
std::optional<ViolationCode> parse_violation_code(std::string_view s);

// A location is either the whole pathway, one node, or one edge.
using Location = std::variant<std::monostate, NodeId, Edge>;

std::string describe(const Location& loc);

struct ValidationError {
  ViolationCode code;
  Location location;
  std::string message;
};

/// Input to build_pathway: an arbitrary, possibly malformed graph.
struct PathwayDraft {
  std::string id;
  std::string article_id;
  Origin origin = Origin::Automatic;
  NodeId root;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::optional<double> generation_seconds;
};

/// A structurally valid pathway. Instances can only be produced by
/// build_pathway and are immutable afterwards.
class Pathway {
 public:
  const std::string& id() const noexcept { return id_; }
  const std::string& article_id() const noexcept { return article_id_; }
  Origin origin() const noexcept { return origin_; }
  const NodeId& root() const noexcept { return root_; }
  // Sorted by id.
  std::span<const Node> nodes() const noexcept { return nodes_; }
  // Sorted by (from, answer, to).
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::optional<double> generation_seconds() const noexcept { return generation_seconds_; }

  const Node* find(const NodeId& id) const;
  const Node& node(const NodeId& id) const;  // throws UnknownNode
  std::size_t question_count() const;

  PathwayDraft to_draft() const;

 private:
  friend struct PathwayBuilderAccess;
  Pathway() = default;

  std::string id_;
  std::string article_id_;
  Origin origin_ = Origin::Automatic;
  NodeId root_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::optional<double> generation_seconds_;
  std::unordered_map<NodeId, std::size_t, NodeIdHash> index_;
  // Per node index: [yes target, no target] for questions.
  std::vector<std::optional<NodeId>> yes_;
  std::vector<std::optional<NodeId>> no_;

  friend std::map<Answer, NodeId> successors(const Pathway&, const NodeId&);
};

struct BuildResult {
  std::optional<Pathway> pathway;
  std::vector<ValidationError> violations;

  bool ok() const noexcept { return pathway.has_value(); }
};

/// Normalizes ids to NFC, then returns a Pathway iff every structural
/// invariant holds; otherwise the complete violation list. Never throws on
/// malformed graphs.
BuildResult build_pathway(PathwayDraft draft);

/// Like build_pathway but throws Error{StructurallyInvalid} on violations.
Pathway build_pathway_or_throw(PathwayDraft draft);

std::map<Answer, NodeId> successors(const Pathway& pathway, const NodeId& node);

/// Kahn's algorithm with lexicographic tie-breaks. Throws CycleDetected when
/// the edge relation has a cycle, UnknownNode on dangling references.
std::vector<NodeId> topological_order(std::span<const Node> nodes, std::span<const Edge> edges);
std::vector<NodeId> topological_order(const Pathway& pathway);

bool structurally_identical(const Pathway& a, const Pathway& b);

}  // namespace pathforge
