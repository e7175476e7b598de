#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pathforge/engine.hpp"
#include "pathforge/evaluation.hpp"
#include "pathforge/extraction.hpp"
#include "pathforge/validation.hpp"

namespace pathforge {

using json = nlohmann::json;

// JSON views shared by the CLI (--json) and the HTTP service.
json to_json(const Location& loc);
json to_json(const ValidationError& e);
json to_json(const LintWarning& w);
json to_json(const ValidationReport& r);
json to_json(const Article& a, bool with_text = true);
// Summary written next to extracted documents; the pathway itself is not
// embedded (it lives in the document file).
json to_json(const ExtractionResult& r);
json to_json(const InterviewSession& s);
json to_json(const std::vector<TraceRow>& rows);
json to_json(const StructuralMatch& m);
json to_json(const ComparisonRecord& c);
json to_json(const ManualRating& r);
json to_json(const ArticleStatsTable& t);
json to_json(const RatingsSummary& s);
json to_json(const BlindReport& r);
// With reveal=false the label assignment and pathway ids are withheld until
// the trial has been unblinded.
json blind_trial_json(const BlindTrial& t, bool reveal);

json violations_json(const std::vector<ValidationError>& violations);

/// Throws Error{MalformedDocument} naming the offending field.
ManualRating rating_from_json(const json& j);

/// Persisted session state: {id, pathway_id, history, version}.
json session_state(const InterviewSession& s);
InterviewSession session_from_state(const json& j, std::shared_ptr<const Pathway> pathway);

/// Line-delimited rating records, one per (pathway, rater). Appends are
/// serialized in-process; each record is written with a single append.
class RatingStore {
 public:
  explicit RatingStore(std::filesystem::path file);

  std::vector<ManualRating> load() const;
  // Throws Error{DuplicateRecord} when the (pathway, rater) pair exists.
  void add(const ManualRating& rating);
  const std::filesystem::path& file() const noexcept { return file_; }

 private:
  std::filesystem::path file_;
  mutable std::mutex mutex_;
};

/// Blind trials as an append-only event log (create, response, unblind).
/// The current state of a trial is the replay of its events.
class TrialStore {
 public:
  explicit TrialStore(std::filesystem::path file);

  std::vector<BlindTrial> load() const;
  std::optional<BlindTrial> get(const std::string& trial_id) const;
  // Throws Error{DuplicateRecord} for a reused trial id.
  BlindTrial create(const BlindTrial& trial);
  BlindTrial respond(const std::string& trial_id, BlindQuestion q, Preference p);
  BlindTrial unblind(const std::string& trial_id, const std::string& timestamp);
  const std::filesystem::path& file() const noexcept { return file_; }

 private:
  std::vector<BlindTrial> load_locked() const;
  void append_locked(const json& event);

  std::filesystem::path file_;
  mutable std::mutex mutex_;
};

/// Appends one line to a file, creating parent directories.
void append_line(const std::filesystem::path& file, const std::string& line);

}  // namespace pathforge
