#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pathforge/pathway.hpp"

namespace pathforge {

inline constexpr std::string_view kPromptSchemaVersion = "pathforge-prompt/1";

struct PromptBundle {
  std::string system_message;
  std::string user_message;
  std::string response_schema_version;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

/// Throws Error{EmptyArticle} when the article text is blank.
PromptBundle build_prompt(const Article& article);

enum class ProviderKind { LiveHttp, MockFixture, Replay };

std::string_view to_string(ProviderKind k) noexcept;
std::optional<ProviderKind> parse_provider_kind(std::string_view s);

struct ProviderConfig {
  ProviderKind kind = ProviderKind::MockFixture;
  std::string model_name = "gpt-4";
  double temperature = 0.0;
  int max_parallel = 4;
  int retry_limit = 3;
  double timeout_seconds = 120.0;
  std::string credentials_env_var = "PATHFORGE_API_KEY";
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  // MockFixture: directory of <article_id>.json or <fingerprint>.json fixtures.
  std::filesystem::path fixture_dir;
  // Replay: directory of <fingerprint>.json recordings. With record=true a
  // live provider writes there as well.
  std::filesystem::path replay_dir;
  bool record = false;
};

// Throws Error{InvalidConfig} on out-of-range values.
void check_provider_config(const ProviderConfig& config);

/// SHA-256 (hex) over system message, user message, model name and
/// temperature. Stable across runs and platforms.
std::string request_fingerprint(const PromptBundle& prompt, const std::string& model_name,
                                double temperature);

struct RawModelResponse {
  std::string text;
  double latency_seconds = 0.0;
  std::string model_name;
  std::string request_fingerprint;
};

struct ProviderRequest {
  const Article& article;
  const PromptBundle& prompt;
  std::string model_name;
  double temperature = 0.0;
  std::string fingerprint;
};

/// Failures worth retrying: transport errors, HTTP 5xx and 429.
class TransientProviderError : public Error {
 public:
  explicit TransientProviderError(const std::string& message)
      : Error(Errc::ProviderUnavailable, message) {}
};

class Provider {
 public:
  virtual ~Provider() = default;
  // Returns the verbatim completion. Throws TransientProviderError for
  // retryable failures and Error{ProviderRejected} for the rest.
  virtual RawModelResponse complete(const ProviderRequest& request) = 0;
};

struct FixtureEntry {
  std::string response_text;
  // Reported latency; nothing actually waits this long.
  double latency_seconds = 0.0;
  // Real wall-clock delay before answering, for concurrency tests.
  std::chrono::milliseconds delay{0};
  // Number of transient failures to raise before succeeding; -1 fails forever.
  int transient_failures = 0;
};

/// Canned responses keyed by article id or request fingerprint.
class MockFixtureProvider : public Provider {
 public:
  MockFixtureProvider() = default;
  explicit MockFixtureProvider(std::map<std::string, FixtureEntry> entries);
  // Loads <key>.json files: {"response_text", "latency_seconds"?, "delay_ms"?,
  // "transient_failures"?}.
  static std::shared_ptr<MockFixtureProvider> from_directory(const std::filesystem::path& dir);

  void add(std::string key, FixtureEntry entry);
  RawModelResponse complete(const ProviderRequest& request) override;

  // Peak number of concurrent complete() calls observed.
  int peak_in_flight() const;
  int calls() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, FixtureEntry> entries_;
  std::map<std::string, int> failures_seen_;
  int in_flight_ = 0;
  int peak_ = 0;
  int calls_ = 0;
};

struct ReplayRecord {
  std::string fingerprint;
  std::string system_message;
  std::string user_message;
  std::string model_name;
  double temperature = 0.0;
  std::string response_text;
  double latency_seconds = 0.0;
  std::string recorded_at;
};

/// Directory of <fingerprint>.json recordings. Concurrent reads, serialized
/// writes (temp file + rename).
class ReplayStore {
 public:
  explicit ReplayStore(std::filesystem::path dir);

  std::optional<ReplayRecord> load(const std::string& fingerprint) const;
  void save(const ReplayRecord& record);
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex write_mutex_;
};

class ReplayProvider : public Provider {
 public:
  explicit ReplayProvider(std::shared_ptr<ReplayStore> store);
  RawModelResponse complete(const ProviderRequest& request) override;

 private:
  std::shared_ptr<ReplayStore> store_;
};

/// OpenAI-style chat-completion endpoint over HTTP(S).
class LiveHttpProvider : public Provider {
 public:
  LiveHttpProvider(std::string endpoint_url, std::string api_key, double timeout_seconds);
  RawModelResponse complete(const ProviderRequest& request) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  double timeout_seconds_;
};

/// Wraps another provider and records every successful response.
class RecordingProvider : public Provider {
 public:
  RecordingProvider(std::shared_ptr<Provider> inner, std::shared_ptr<ReplayStore> store);
  RawModelResponse complete(const ProviderRequest& request) override;

 private:
  std::shared_ptr<Provider> inner_;
  std::shared_ptr<ReplayStore> store_;
};

/// Builds the provider described by config. LiveHttp reads the API key from
/// config.credentials_env_var and fails with InvalidConfig when it is unset.
std::shared_ptr<Provider> make_provider(const ProviderConfig& config);

/// Exponential backoff: 1 s, doubling, uniform jitter of +/-20%.
struct RetryPolicy {
  int retry_limit = 3;
  std::chrono::duration<double> initial_delay{1.0};
  double multiplier = 2.0;
  double jitter = 0.2;

  // Delay before retry number `retry` (0-based), jittered with `rng`.
  std::chrono::duration<double> delay(int retry, std::mt19937_64& rng) const;
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

/// Calls provider.complete, retrying transient failures up to retry_limit
/// times. Throws Error{ProviderUnavailable} once retries are exhausted.
RawModelResponse complete_with_retry(Provider& provider, const ProviderRequest& request,
                                     const RetryPolicy& policy, const Sleeper& sleep,
                                     std::mt19937_64& rng);

/// Graph as emitted by the model, with ids renamed n1, n2, ... in block order.
struct ModelGraph {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  NodeId root;
};

struct ParseFailure {
  std::size_t offset = 0;
  std::string message;
};

struct ParseOutcome {
  std::optional<ModelGraph> graph;
  std::vector<std::string> repair_log;
  std::optional<ParseFailure> failure;
};

/// Total on arbitrary bytes. Repair steps, in order: strip a markdown code
/// fence ("stripped_code_fence"), cut out the first balanced top-level object
/// ("extracted_json_object"); anything that still fails is reported with the
/// byte offset of the failure.
ParseOutcome parse_model_json(std::string_view text);

enum class ExtractionStatus { Ok, ProviderUnavailable, UnparseableResponse, StructurallyInvalid, Failed };

std::string_view to_string(ExtractionStatus s) noexcept;

struct ExtractionResult {
  std::string article_id;
  ExtractionStatus status = ExtractionStatus::Failed;
  std::optional<Pathway> pathway;
  std::vector<ValidationError> violations;
  std::vector<std::string> repair_log;
  RawModelResponse raw;
  std::string error_message;

  bool ok() const noexcept { return status == ExtractionStatus::Ok; }
};

struct ExtractOptions {
  Sleeper sleep;  // defaults to std::this_thread::sleep_for
  std::uint64_t jitter_seed = 0x5eedULL;
};

/// Id given to automatically extracted pathways.
std::string automatic_pathway_id(const std::string& article_id);

ExtractionResult extract(const Article& article, const ProviderConfig& config, Provider& provider,
                         const ExtractOptions& options = {});

/// Runs extract over every article with at most config.max_parallel requests
/// in flight. Results keep input order; a failing article never aborts the
/// batch. Throws Error{InvalidConfig} for an empty batch or bad config.
std::vector<ExtractionResult> extract_batch(const std::vector<Article>& articles,
                                            const ProviderConfig& config, Provider& provider,
                                            const ExtractOptions& options = {});

}  // namespace pathforge
