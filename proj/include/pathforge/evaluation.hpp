#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pathforge/pathway.hpp"

namespace pathforge {

// ---------------------------------------------------------------------------
// Formatting helpers shared by the report tables.

/// Fixed-point rendering with round-half-away-from-zero ("6.125" -> "6.13").
std::string format_fixed(double value, int digits);

/// A count with its share of the total in tenths of a percent.
struct Share {
  std::size_t count = 0;
  int tenths = 0;  // 925 -> 92.5%

  std::string percent() const;            // "92.5"
  std::string count_and_percent() const;  // "37 (92.5%)"
};

/// Largest-remainder apportionment of 100.0% across `counts` in tenths, so
/// the shares always sum to exactly 100.0 (or all 0 for an empty total).
std::vector<Share> apportion(std::span<const std::size_t> counts);

// ---------------------------------------------------------------------------
// Matching automatic against manual pathways.

inline constexpr std::size_t kMaxMatchNodes = 12;

/// Dice coefficient over content tokens; two token-free texts score 1.0.
double dice_similarity(std::string_view a, std::string_view b);

struct StructuralMatch {
  bool matched = false;
  std::map<NodeId, NodeId> witness;  // node of a -> node of b
};

/// Exhaustive search for a bijection that preserves kind, root, every edge
/// with its answer, and pairs nodes whose Dice similarity >= threshold.
/// Throws Error{TooLarge} beyond kMaxMatchNodes nodes.
StructuralMatch structural_match(const Pathway& a, const Pathway& b, double text_similarity_threshold = 0.5);

struct AutoMetrics {
  double grounding_mean = 0.0;
  double article_coverage = 0.0;
  std::size_t node_count = 0;
  std::optional<double> generation_seconds;
};

enum class OverallRating { Correct, SlightAdjustment, StartingPoint, Useless };

std::string_view to_string(OverallRating r) noexcept;
std::string_view label(OverallRating r) noexcept;
std::optional<OverallRating> parse_overall_rating(std::string_view s);

struct ManualRating {
  std::string pathway_id;
  std::string rater_id;
  bool textual_accuracy = false;
  bool completeness = false;
  bool no_hallucination = false;
  bool matching = false;
  OverallRating overall = OverallRating::Correct;
  std::string comments;
};

struct ComparisonRecord {
  std::string article_id;
  std::string automatic;
  std::string manual;
  AutoMetrics auto_metrics;
  bool structural_match = false;
  std::map<NodeId, NodeId> witness;
  std::vector<ManualRating> ratings;
};

/// Throws Error{InvalidPathway} if origins or article ids do not line up.
ComparisonRecord compare_pathways(const Article& article, const Pathway& automatic, const Pathway& manual,
                                  double text_similarity_threshold = 0.5);

// ---------------------------------------------------------------------------
// Article statistics grouped by difficulty.

struct ArticleStatsRow {
  Difficulty difficulty = Difficulty::Unrated;
  std::size_t n = 0;
  std::optional<double> mean_characters;
  std::optional<double> mean_manual_minutes;
  std::optional<double> mean_automatic_seconds;
  std::optional<double> mean_manual_nodes;
  std::optional<double> mean_automatic_nodes;
};

struct ArticleStatsTable {
  std::vector<ArticleStatsRow> rows;  // Easy, Normal, Hard, then Unrated if present

  std::string render_text() const;
  std::string render_csv() const;
};

std::string render_stats_row(const ArticleStatsRow& row);

/// Throws Error{UnknownArticle} if a pathway names an article not listed.
ArticleStatsTable aggregate_article_stats(std::span<const Article> articles, std::span<const Pathway> pathways);

// ---------------------------------------------------------------------------
// Manual rating summary.

struct CriterionSummary {
  std::string name;
  std::string question;
  Share yes;
  Share no;
};

struct RatingsSummary {
  std::size_t total = 0;
  std::vector<CriterionSummary> criteria;  // textual accuracy, completeness, no hallucination, matching
  std::array<Share, 4> overall{};          // indexed by OverallRating

  std::string render_text() const;
  std::string render_csv() const;
};

RatingsSummary summarize_ratings(std::span<const ManualRating> ratings);

// ---------------------------------------------------------------------------
// Blind A/B comparison.

enum class Preference { A, B, Equivalent };
enum class BlindQuestion { Overall, Content, Logic };
enum class Attribution { Automatic, Equivalent, Manual };

inline constexpr std::array<BlindQuestion, 3> kBlindQuestions{BlindQuestion::Overall, BlindQuestion::Content,
                                                              BlindQuestion::Logic};

std::string_view to_string(Preference p) noexcept;
std::string_view to_string(BlindQuestion q) noexcept;
std::string_view question_text(BlindQuestion q) noexcept;
std::optional<Preference> parse_preference(std::string_view s);
std::optional<BlindQuestion> parse_blind_question(std::string_view s);

struct BlindTrial {
  std::string trial_id;
  std::string article_id;
  std::string label_a;  // pathway shown as "A"
  std::string label_b;
  std::uint64_t assignment_seed = 0;
  std::array<std::optional<Preference>, 3> responses{};
  bool unblinded = false;
  std::string unblinded_at;
  // Kept for unblinding; never part of the anonymized rendering.
  std::string automatic_id;
  std::string manual_id;

  bool complete() const;
};

/// Fair coin from SHA-256(seed, trial_id): true when the automatic pathway is
/// shown as "A".
bool automatic_shown_first(std::uint64_t seed, std::string_view trial_id);

/// Throws Error{MissingPathway} when either pathway id is empty.
BlindTrial blind_pair(std::string article_id, std::string automatic_id, std::string manual_id, std::uint64_t seed,
                      std::string trial_id);

/// Throws Error{TrialUnblinded} after unblinding.
void record_response(BlindTrial& trial, BlindQuestion question, Preference preference);

/// Irreversible. Throws Error{TrialIncomplete} unless all three questions
/// have been answered.
void unblind(BlindTrial& trial, std::string timestamp);

/// Throws Error{TrialIncomplete} unless the trial is unblinded and answered.
Attribution attribute(const BlindTrial& trial, BlindQuestion question);

/// JSON text of the two pathways as "A" and "B" with ids, origin and timing
/// removed. Throws Error{MissingPathway} if the pathways do not match the trial.
std::string render_anonymized(const BlindTrial& trial, const Article& article, const Pathway& automatic,
                              const Pathway& manual);

struct PreferenceSplit {
  std::array<std::size_t, 3> counts{};  // automatic, equivalent, manual
  std::array<Share, 3> shares() const;
};

struct BlindReport {
  std::map<BlindQuestion, PreferenceSplit> by_question;
  std::map<BlindQuestion, std::map<Difficulty, PreferenceSplit>> by_difficulty;

  std::string render_text() const;  // summary table followed by the difficulty split
  std::string render_csv() const;
};

std::string render_blind_row(BlindQuestion q, const PreferenceSplit& split);
std::string render_difficulty_row(Difficulty d, const PreferenceSplit& split);

/// Throws Error{TrialIncomplete} if any trial is still blinded or unanswered.
BlindReport blind_report(std::span<const BlindTrial> trials,
                         const std::map<std::string, Difficulty>& article_difficulty = {});

}  // namespace pathforge
