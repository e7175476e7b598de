#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pathforge/pathway.hpp"

namespace pathforge {

/// Returns every structural violation of the graph, each with a location.
/// Total on arbitrary input; an empty result means the graph satisfies all
/// Pathway invariants. Output order is deterministic.
std::vector<ValidationError> validate_structure(std::span<const Node> nodes,
                                                std::span<const Edge> edges,
                                                const NodeId& root);

/// matched / total over distinct content tokens.
struct Overlap {
  std::size_t matched = 0;
  std::size_t total = 0;

  // Vacuous overlaps (total == 0) count as 1.0.
  double value() const noexcept {
    return total == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(total);
  }
};

Overlap grounding_overlap(std::string_view node_text, std::string_view article_text);

/// Fraction of the node's content tokens present in the article. Throws
/// Error{EmptyText} when either text is blank.
double grounding_score(std::string_view node_text, std::string_view article_text);

Overlap coverage_overlap(const Pathway& pathway, const Article& article);

/// Fraction of the article's content tokens that occur in any node text.
/// An article without content tokens is fully covered.
double article_coverage(const Pathway& pathway, const Article& article);

enum class LintCode {
  PossibleDenialOfAntecedent,
  UngroundedNode,
  CriterionInConclusion,
  LowArticleCoverage,
};

std::string_view to_string(LintCode c) noexcept;

struct LintWarning {
  LintCode code;
  Location location;
  std::optional<double> score;
  std::string message;
};

struct LintConfig {
  double grounding_threshold = 0.6;
  double coverage_threshold = 0.5;
  // language tag -> markers; all languages are checked.
  std::map<std::string, std::vector<std::string>> conditional_markers = default_conditional_markers();

  static std::map<std::string, std::vector<std::string>> default_conditional_markers();
};

std::vector<LintWarning> lint(const Pathway& pathway, const Article& article,
                              const LintConfig& config = {});

struct ValidationReport {
  std::string pathway_id;
  std::vector<ValidationError> errors;
  std::vector<LintWarning> warnings;
  std::map<NodeId, double> grounding;
  std::optional<double> article_coverage;

  bool is_valid() const noexcept { return errors.empty(); }
};

/// Structural check of an arbitrary draft; when it passes and an article is
/// given, lint results, grounding and coverage are filled in too.
ValidationReport make_report(const PathwayDraft& draft, const Article* article,
                             const LintConfig& config = {});

}  // namespace pathforge
