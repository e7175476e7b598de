#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pathforge/pathway.hpp"

namespace pathforge {

inline constexpr std::string_view kDocumentSchemaVersion = "pathforge/1";

/// Failure to read a pathway document. `json_path` points at the first
/// offending value ("$.pathway.nodes[2].kind"); `violations` is filled for
/// StructurallyInvalid.
class DocumentError : public Error {
 public:
  DocumentError(Errc code, std::string json_path, const std::string& message,
                std::vector<ValidationError> violations = {})
      : Error(code, message), json_path_(std::move(json_path)), violations_(std::move(violations)) {}

  const std::string& json_path() const noexcept { return json_path_; }
  const std::vector<ValidationError>& violations() const noexcept { return violations_; }

 private:
  std::string json_path_;
  std::vector<ValidationError> violations_;
};

/// Canonical "pathforge/1" bytes: sorted keys, nodes by id, edges by
/// (from, answer, to), two-space indent, UTF-8, LF, trailing newline.
/// Throws Error{InvalidPathway} if the pathway does not belong to the article
/// or a citation span falls outside the article text.
std::string export_pathway(const Pathway& pathway, const Article& article);

/// Document contents before the structural check.
struct PathwayDocument {
  PathwayDraft draft;
  Article article;
};

/// Schema-level parse only. Throws DocumentError{UnsupportedVersion |
/// MalformedDocument}.
PathwayDocument parse_pathway_document(std::string_view bytes);

struct ImportedPathway {
  Pathway pathway;
  Article article;
};

/// Total on arbitrary bytes: returns the pathway or throws DocumentError with
/// UnsupportedVersion, MalformedDocument or StructurallyInvalid.
ImportedPathway import_pathway(std::string_view bytes);

/// Reads a directory of article files (one JSON object each) or a single JSON
/// file holding an object or an array of objects. Result is sorted by id.
/// Throws Error{DuplicateArticleId | MalformedArticle | Io}.
std::vector<Article> load_corpus(const std::filesystem::path& path);

Article parse_article(std::string_view bytes, const std::string& origin_name);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, creating parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// UTC, second resolution: 2024-01-31T12:00:00Z
std::string utc_timestamp();

}  // namespace pathforge
