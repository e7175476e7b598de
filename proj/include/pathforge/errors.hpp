#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pathforge {

// Domain failure codes shared across modules. Structural graph problems are
// not reported through these; they travel as ValidationError lists.
enum class Errc {
  UnknownNode,
  CycleDetected,
  InvalidArticle,
  EmptyArticle,
  EmptyText,
  ProviderUnavailable,
  ProviderRejected,
  UnparseableResponse,
  StructurallyInvalid,
  InvalidPathway,
  SessionConcluded,
  NothingToUndo,
  Conflict,
  TooLarge,
  UnknownArticle,
  MissingPathway,
  TrialIncomplete,
  TrialUnblinded,
  DuplicateRecord,
  UnsupportedVersion,
  MalformedDocument,
  DuplicateArticleId,
  MalformedArticle,
  NotFound,
  InvalidConfig,
  Io,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pathforge
