#include <atomic>
#include <thread>

#include "pathforge/extraction.hpp"

namespace pathforge {

std::string_view to_string(ExtractionStatus s) noexcept {
  switch (s) {
    case ExtractionStatus::Ok: return "ok";
    case ExtractionStatus::ProviderUnavailable: return "provider_unavailable";
    case ExtractionStatus::UnparseableResponse: return "unparseable_response";
    case ExtractionStatus::StructurallyInvalid: return "structurally_invalid";
    case ExtractionStatus::Failed: return "failed";
  }
  return "failed";
}

std::string automatic_pathway_id(const std::string& article_id) { return article_id + ".auto"; }

ExtractionResult extract(const Article& article, const ProviderConfig& config, Provider& provider,
                         const ExtractOptions& options) {
  check_provider_config(config);
  ExtractionResult result;
  result.article_id = article.id;

  const PromptBundle prompt = build_prompt(article);
  const std::string fingerprint = request_fingerprint(prompt, config.model_name, config.temperature);
  ProviderRequest request{article, prompt, config.model_name, config.temperature, fingerprint};
  result.raw.model_name = config.model_name;
  result.raw.request_fingerprint = fingerprint;

  RetryPolicy policy;
  policy.retry_limit = config.retry_limit;
  Sleeper sleep = options.sleep ? options.sleep : Sleeper([](std::chrono::duration<double> d) {
    std::this_thread::sleep_for(d);
  });
  std::mt19937_64 rng(options.jitter_seed);

  try {
    result.raw = complete_with_retry(provider, request, policy, sleep, rng);
  } catch (const Error& e) {
    result.status = ExtractionStatus::ProviderUnavailable;
    result.error_message = e.what();
    return result;
  }

  ParseOutcome parsed = parse_model_json(result.raw.text);
  result.repair_log = std::move(parsed.repair_log);
  if (!parsed.graph) {
    result.status = ExtractionStatus::UnparseableResponse;
    result.error_message = "unparseable model response at byte " + std::to_string(parsed.failure->offset) +
                           ": " + parsed.failure->message;
    return result;
  }

  PathwayDraft draft;
  draft.id = automatic_pathway_id(article.id);
  draft.article_id = article.id;
  draft.origin = Origin::Automatic;
  draft.root = std::move(parsed.graph->root);
  draft.nodes = std::move(parsed.graph->nodes);
  draft.edges = std::move(parsed.graph->edges);
  draft.generation_seconds = result.raw.latency_seconds;

  BuildResult built = build_pathway(std::move(draft));
  if (!built.ok()) {
    result.status = ExtractionStatus::StructurallyInvalid;
    result.violations = std::move(built.violations);
    result.error_message = "model output is not a valid pathway (" + std::to_string(result.violations.size()) +
                           " violation(s))";
    return result;
  }
  result.pathway = std::move(built.pathway);
  result.status = ExtractionStatus::Ok;
  return result;
}

std::vector<ExtractionResult> extract_batch(const std::vector<Article>& articles, const ProviderConfig& config,
                                            Provider& provider, const ExtractOptions& options) {
  if (articles.empty()) throw Error(Errc::InvalidConfig, "extract_batch needs at least one article");
  check_provider_config(config);

  std::vector<std::optional<ExtractionResult>> slots(articles.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < articles.size(); i = next++) {
      ExtractOptions item_options = options;
      item_options.jitter_seed = options.jitter_seed + i;
      try {
        slots[i] = extract(articles[i], config, provider, item_options);
      } catch (const std::exception& e) {
        ExtractionResult failed;
        failed.article_id = articles[i].id;
        failed.status = ExtractionStatus::Failed;
        failed.error_message = e.what();
        slots[i] = std::move(failed);
      }
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.max_parallel), articles.size());
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::vector<ExtractionResult> results;
  results.reserve(slots.size());
  for (auto& s : slots) results.push_back(std::move(*s));
  return results;
}

}  // namespace pathforge
