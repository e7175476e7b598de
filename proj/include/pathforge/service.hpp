#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "pathforge/engine.hpp"
#include "pathforge/extraction.hpp"
#include "pathforge/records.hpp"
#include "pathforge/validation.hpp"

namespace pathforge {

struct ToolConfig {
  ProviderConfig provider;
  double grounding_threshold = 0.6;
  double coverage_threshold = 0.5;
  std::map<std::string, std::vector<std::string>> conditional_markers = LintConfig::default_conditional_markers();
  std::filesystem::path data_dir = "data";
  std::string listen_address = "127.0.0.1:8080";
  std::uint64_t blind_seed = 0;
  // Built review UI assets; served for non-API paths when set.
  std::filesystem::path ui_dir;

  LintConfig lint_config() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

/// Reads a flat JSON config file (empty path = defaults only) and applies
/// PATHFORGE_<FIELD> overrides. Relative paths resolve against the file's
/// directory. Throws Error{InvalidConfig}.
ToolConfig load_tool_config(const std::filesystem::path& file, const EnvLookup& env = process_env);

// Throws Error{InvalidConfig}; creates data_dir and checks it is writable.
void check_tool_config(const ToolConfig& config);

struct HttpRequest {
  std::string method;
  std::string path;  // without query string
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// HTTP status used for a domain error code.
int http_status(Errc code) noexcept;

/// Filesystem layout under data_dir:
///   articles/*.json           article corpus
///   pathways/<id>.json        canonical pathway documents
///   pathways/<id>.meta.json   edit version
///   sessions/<id>.json        interview sessions
///   ratings.jsonl, trials.jsonl
class Service {
 public:
  explicit Service(ToolConfig config, std::shared_ptr<Provider> provider = nullptr);

  HttpResponse handle(const HttpRequest& request);

  // Blocks until stop() is called or the listener fails.
  void serve();
  void stop();
  // Port actually bound by serve(); 0 before binding.
  int bound_port() const noexcept { return bound_port_.load(); }

  const ToolConfig& config() const noexcept { return config_; }

 private:
  struct StoredPathway {
    std::shared_ptr<const Pathway> pathway;
    Article article;
    std::uint64_t version = 0;
  };
  struct PathwaySlot {
    std::mutex write;
    std::shared_ptr<const StoredPathway> current;
  };
  struct SessionSlot {
    std::mutex write;
    std::shared_ptr<const InterviewSession> current;
  };

  HttpResponse route(const HttpRequest& request);

  json list_articles() const;
  json get_article(const std::string& id) const;
  HttpResponse post_extract(const json& body);
  json list_pathways();
  json get_pathway(const std::string& id);
  json put_pathway(const std::string& id, const json& body);
  json validate_pathway(const std::string& id, const json& body);
  json create_session(const json& body);
  json get_session(const std::string& id);
  json session_step(const std::string& id, const json& body, bool is_undo);
  json session_trace(const std::string& id);
  json post_rating(const json& body);
  json ratings_report() const;
  json create_trial(const json& body);
  json get_trial(const std::string& id) const;
  json trial_response(const std::string& id, const json& body);
  json unblind_trial(const json& body);
  json blind_report_json() const;
  std::optional<HttpResponse> static_file(const std::string& path) const;

  std::vector<Article> articles() const;
  std::shared_ptr<PathwaySlot> pathway_slot(const std::string& id);
  std::shared_ptr<const StoredPathway> stored_pathway(const std::string& id);
  void store_pathway(PathwaySlot& slot, const std::string& id, Pathway pathway, Article article,
                     std::uint64_t version);
  std::shared_ptr<SessionSlot> session_slot(const std::string& id);

  std::filesystem::path articles_dir() const { return config_.data_dir / "articles"; }
  std::filesystem::path pathways_dir() const { return config_.data_dir / "pathways"; }
  std::filesystem::path sessions_dir() const { return config_.data_dir / "sessions"; }

  ToolConfig config_;
  std::shared_ptr<Provider> provider_;
  RatingStore ratings_;
  TrialStore trials_;

  std::mutex slots_mutex_;
  std::map<std::string, std::shared_ptr<PathwaySlot>> pathways_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  std::atomic<std::uint64_t> session_counter_{0};

  std::atomic<int> bound_port_{0};
  std::mutex server_mutex_;
  std::function<void()> stop_server_;
};

/// Path of the document file for a pathway id.
std::filesystem::path pathway_file(const std::filesystem::path& dir, const std::string& pathway_id);

}  // namespace pathforge
