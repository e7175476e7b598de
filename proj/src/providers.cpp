#include <cmath>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "pathforge/extraction.hpp"
#include "pathforge/io.hpp"

namespace pathforge {

using nlohmann::json;

std::string_view to_string(ProviderKind k) noexcept {
  switch (k) {
    case ProviderKind::LiveHttp: return "live";
    case ProviderKind::MockFixture: return "mock";
    case ProviderKind::Replay: return "replay";
  }
  return "mock";
}

std::optional<ProviderKind> parse_provider_kind(std::string_view s) {
  if (s == "live") return ProviderKind::LiveHttp;
  if (s == "mock") return ProviderKind::MockFixture;
  if (s == "replay") return ProviderKind::Replay;
  return std::nullopt;
}

void check_provider_config(const ProviderConfig& c) {
  if (c.max_parallel < 1) throw Error(Errc::InvalidConfig, "max_parallel must be at least 1");
  if (c.retry_limit < 0) throw Error(Errc::InvalidConfig, "retry_limit must be non-negative");
  if (!(c.timeout_seconds > 0)) throw Error(Errc::InvalidConfig, "timeout_seconds must be positive");
  if (!std::isfinite(c.temperature) || c.temperature < 0)
    throw Error(Errc::InvalidConfig, "temperature must be a non-negative number");
}

MockFixtureProvider::MockFixtureProvider(std::map<std::string, FixtureEntry> entries)
    : entries_(std::move(entries)) {}

std::shared_ptr<MockFixtureProvider> MockFixtureProvider::from_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw Error(Errc::InvalidConfig, "fixture directory '" + dir.string() + "' does not exist");
  std::map<std::string, FixtureEntry> entries;
  for (const auto& item : std::filesystem::directory_iterator(dir)) {
    if (!item.is_regular_file() || item.path().extension() != ".json") continue;
    json j;
    try {
      j = json::parse(read_file(item.path()));
      FixtureEntry e;
      e.response_text = j.at("response_text").get<std::string>();
      e.latency_seconds = j.value("latency_seconds", 0.0);
      e.delay = std::chrono::milliseconds(j.value("delay_ms", 0));
      e.transient_failures = j.value("transient_failures", 0);
      entries.emplace(item.path().stem().string(), std::move(e));
    } catch (const json::exception& ex) {
      throw Error(Errc::InvalidConfig, "bad fixture '" + item.path().string() + "': " + ex.what());
    }
  }
  return std::make_shared<MockFixtureProvider>(std::move(entries));
}

void MockFixtureProvider::add(std::string key, FixtureEntry entry) {
  std::lock_guard lock(mutex_);
  entries_[std::move(key)] = std::move(entry);
}

RawModelResponse MockFixtureProvider::complete(const ProviderRequest& request) {
  FixtureEntry entry;
  bool fail = false;
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    auto it = entries_.find(request.fingerprint);
    if (it == entries_.end()) it = entries_.find(request.article.id);
    if (it == entries_.end())
      throw Error(Errc::ProviderRejected, "no fixture for article '" + request.article.id + "'");
    entry = it->second;
    int& seen = failures_seen_[it->first];
    if (entry.transient_failures < 0 || seen < entry.transient_failures) {
      ++seen;
      fail = true;
    }
    peak_ = std::max(peak_, ++in_flight_);
  }
  if (entry.delay.count() > 0) std::this_thread::sleep_for(entry.delay);
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  if (fail) throw TransientProviderError("injected transient failure for '" + request.article.id + "'");
  return RawModelResponse{entry.response_text, entry.latency_seconds, request.model_name, request.fingerprint};
}

int MockFixtureProvider::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

int MockFixtureProvider::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

ReplayStore::ReplayStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<ReplayRecord> ReplayStore::load(const std::string& fingerprint) const {
  auto path = dir_ / (fingerprint + ".json");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  try {
    json j = json::parse(read_file(path));
    const json& req = j.at("request");
    ReplayRecord r;
    r.fingerprint = req.value("fingerprint", fingerprint);
    r.system_message = req.at("system_message").get<std::string>();
    r.user_message = req.at("user_message").get<std::string>();
    r.model_name = j.at("model_name").get<std::string>();
    r.temperature = req.at("temperature").get<double>();
    r.response_text = j.at("response_text").get<std::string>();
    r.latency_seconds = j.at("latency_seconds").get<double>();
    r.recorded_at = j.value("recorded_at", "");
    return r;
  } catch (const json::exception& ex) {
    throw Error(Errc::ProviderRejected, "corrupt replay record '" + path.string() + "': " + ex.what());
  }
}

void ReplayStore::save(const ReplayRecord& r) {
  json j = {
      {"request",
       {{"fingerprint", r.fingerprint},
        {"model", r.model_name},
        {"temperature", r.temperature},
        {"system_message", r.system_message},
        {"user_message", r.user_message}}},
      {"response_text", r.response_text},
      {"latency_seconds", r.latency_seconds},
      {"model_name", r.model_name},
      {"recorded_at", r.recorded_at},
  };
  std::lock_guard lock(write_mutex_);
  write_file_atomic(dir_ / (r.fingerprint + ".json"), j.dump(2) + "\n");
}

ReplayProvider::ReplayProvider(std::shared_ptr<ReplayStore> store) : store_(std::move(store)) {}

RawModelResponse ReplayProvider::complete(const ProviderRequest& request) {
  auto rec = store_->load(request.fingerprint);
  if (!rec)
    throw Error(Errc::ProviderRejected, "no recording " + request.fingerprint + " for article '" +
                                            request.article.id + "'");
  return RawModelResponse{rec->response_text, rec->latency_seconds, rec->model_name, request.fingerprint};
}

RecordingProvider::RecordingProvider(std::shared_ptr<Provider> inner, std::shared_ptr<ReplayStore> store)
    : inner_(std::move(inner)), store_(std::move(store)) {}

RawModelResponse RecordingProvider::complete(const ProviderRequest& request) {
  RawModelResponse raw = inner_->complete(request);
  store_->save(ReplayRecord{request.fingerprint, request.prompt.system_message, request.prompt.user_message,
                            request.model_name, request.temperature, raw.text, raw.latency_seconds,
                            utc_timestamp()});
  return raw;
}

std::shared_ptr<Provider> make_provider(const ProviderConfig& config) {
  check_provider_config(config);
  std::shared_ptr<Provider> provider;
  switch (config.kind) {
    case ProviderKind::MockFixture:
      if (config.fixture_dir.empty()) throw Error(Errc::InvalidConfig, "mock provider needs a fixture directory");
      provider = MockFixtureProvider::from_directory(config.fixture_dir);
      break;
    case ProviderKind::Replay:
      if (config.replay_dir.empty()) throw Error(Errc::InvalidConfig, "replay provider needs a replay directory");
      return std::make_shared<ReplayProvider>(std::make_shared<ReplayStore>(config.replay_dir));
    case ProviderKind::LiveHttp: {
      const char* key = std::getenv(config.credentials_env_var.c_str());
      if (key == nullptr || *key == '\0')
        throw Error(Errc::InvalidConfig, "environment variable " + config.credentials_env_var + " is not set");
      provider = std::make_shared<LiveHttpProvider>(config.endpoint_url, key, config.timeout_seconds);
      break;
    }
  }
  if (config.record) {
    if (config.replay_dir.empty()) throw Error(Errc::InvalidConfig, "recording needs a replay directory");
    provider = std::make_shared<RecordingProvider>(provider, std::make_shared<ReplayStore>(config.replay_dir));
  }
  return provider;
}

std::chrono::duration<double> RetryPolicy::delay(int retry, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> spread(1.0 - jitter, 1.0 + jitter);
  return initial_delay * std::pow(multiplier, retry) * spread(rng);
}

RawModelResponse complete_with_retry(Provider& provider, const ProviderRequest& request,
                                     const RetryPolicy& policy, const Sleeper& sleep,
                                     std::mt19937_64& rng) {
  for (int attempt = 0;; ++attempt) {
    try {
      return provider.complete(request);
    } catch (const TransientProviderError& e) {
      if (attempt >= policy.retry_limit)
        throw Error(Errc::ProviderUnavailable, "provider unavailable after " + std::to_string(attempt + 1) +
                                                   " attempt(s): " + e.what());
      sleep(policy.delay(attempt, rng));
    }
  }
}

}  // namespace pathforge
