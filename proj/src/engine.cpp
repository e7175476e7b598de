#include "pathforge/engine.hpp"

#include "pathforge/validation.hpp"

namespace pathforge {

SessionStatus InterviewSession::status() const {
  return pathway_->node(current_).kind == NodeKind::Conclusion ? SessionStatus::Concluded
                                                               : SessionStatus::InProgress;
}

bool InterviewSession::same_state(const InterviewSession& other) const {
  return pathway_ == other.pathway_ && history_ == other.history_ && current_ == other.current_;
}

InterviewSession start(std::shared_ptr<const Pathway> pathway, std::string session_id) {
  if (!pathway) throw Error(Errc::InvalidPathway, "no pathway given");
  InterviewSession s;
  s.pathway_ = std::move(pathway);
  s.id_ = std::move(session_id);
  s.current_ = s.pathway_->root();
  s.started_at_ = s.updated_at_ = InterviewSession::Clock::now();
  return s;
}

InterviewSession start(const PathwayDraft& draft, std::string session_id) {
  BuildResult built = build_pathway(draft);
  if (!built.ok()) {
    std::string msg = "cannot interview an invalid pathway:";
    for (const auto& v : built.violations) msg += " " + std::string(to_string(v.code)) + " at " + describe(v.location) + ";";
    throw Error(Errc::InvalidPathway, msg);
  }
  return start(std::make_shared<const Pathway>(std::move(*built.pathway)), std::move(session_id));
}

InterviewSession answer(const InterviewSession& session, Answer a) {
  if (session.status() == SessionStatus::Concluded)
    throw Error(Errc::SessionConcluded, "session '" + session.id() + "' has already concluded");
  auto next = successors(session.pathway(), session.current());
  InterviewSession s = session;
  s.history_.push_back(Step{session.current_, a});
  s.current_ = next.at(a);
  ++s.version_;
  s.updated_at_ = InterviewSession::Clock::now();
  return s;
}

InterviewSession undo(const InterviewSession& session) {
  if (session.history_.empty())
    throw Error(Errc::NothingToUndo, "session '" + session.id() + "' has nothing to undo");
  InterviewSession s = session;
  s.current_ = s.history_.back().node;
  s.history_.pop_back();
  ++s.version_;
  s.updated_at_ = InterviewSession::Clock::now();
  return s;
}

std::vector<TraceRow> trace(const InterviewSession& session) {
  const Pathway& p = session.pathway();
  std::vector<TraceRow> rows;
  rows.reserve(session.history().size());
  for (const auto& step : session.history()) {
    const NodeId next = successors(p, step.node).at(step.answer);
    rows.push_back(TraceRow{p.node(step.node).text, step.answer, p.node(next).text});
  }
  return rows;
}

InterviewSession restore_session(std::shared_ptr<const Pathway> pathway, std::string session_id,
                                 std::vector<Step> history, std::uint64_t version) {
  InterviewSession s = start(std::move(pathway), std::move(session_id));
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].node != s.current_ || s.status() == SessionStatus::Concluded)
      throw Error(Errc::MalformedDocument, "session history step " + std::to_string(i) +
                                               " does not follow the pathway");
    s = answer(s, history[i].answer);
  }
  s.version_ = version;
  return s;
}

}  // namespace pathforge
