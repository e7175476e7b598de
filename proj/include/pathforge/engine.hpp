#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pathforge/pathway.hpp"

namespace pathforge {

enum class SessionStatus { InProgress, Concluded };

struct Step {
  NodeId node;
  Answer answer;

  friend bool operator==(const Step&, const Step&) = default;
};

struct TraceRow {
  std::string question;
  Answer answer;
  std::string next;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Interview over one pathway. The answer history is the only authoritative
/// state; the current node is always re-derived from it. Each answer or undo
/// bumps `version`, which callers use for optimistic concurrency.
class InterviewSession {
 public:
  using Clock = std::chrono::system_clock;

  const std::string& id() const noexcept { return id_; }
  const std::string& pathway_id() const noexcept { return pathway_->id(); }
  const Pathway& pathway() const noexcept { return *pathway_; }
  std::shared_ptr<const Pathway> shared_pathway() const noexcept { return pathway_; }
  const std::vector<Step>& history() const noexcept { return history_; }
  const NodeId& current() const noexcept { return current_; }
  const Node& current_node() const { return pathway_->node(current_); }
  SessionStatus status() const;
  std::uint64_t version() const noexcept { return version_; }
  Clock::time_point started_at() const noexcept { return started_at_; }
  Clock::time_point updated_at() const noexcept { return updated_at_; }

  // Same pathway, history and position (ignores id, version and timestamps).
  bool same_state(const InterviewSession& other) const;

 private:
  friend InterviewSession start(std::shared_ptr<const Pathway>, std::string);
  friend InterviewSession answer(const InterviewSession&, Answer);
  friend InterviewSession undo(const InterviewSession&);
  friend InterviewSession restore_session(std::shared_ptr<const Pathway>, std::string, std::vector<Step>,
                                          std::uint64_t);

  InterviewSession() = default;

  std::shared_ptr<const Pathway> pathway_;
  std::string id_;
  std::vector<Step> history_;
  NodeId current_;
  std::uint64_t version_ = 0;
  Clock::time_point started_at_{};
  Clock::time_point updated_at_{};
};

InterviewSession start(std::shared_ptr<const Pathway> pathway, std::string session_id = "session");

/// Builds the draft first; throws Error{InvalidPathway} listing violations.
InterviewSession start(const PathwayDraft& draft, std::string session_id = "session");

/// Throws Error{SessionConcluded} once a conclusion has been reached.
InterviewSession answer(const InterviewSession& session, Answer a);

/// Throws Error{NothingToUndo} on an empty history.
InterviewSession undo(const InterviewSession& session);

std::vector<TraceRow> trace(const InterviewSession& session);

/// Rebuilds a session by replaying `history` from the root. Throws
/// Error{MalformedDocument} if the history does not fit the pathway.
InterviewSession restore_session(std::shared_ptr<const Pathway> pathway, std::string session_id,
                                 std::vector<Step> history, std::uint64_t version);

}  // namespace pathforge
