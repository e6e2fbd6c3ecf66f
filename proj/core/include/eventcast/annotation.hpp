#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "eventcast/corpus.hpp"

namespace eventcast {

inline constexpr std::string_view kDefaultSentimentPrompt =
    "Analyze the sentiment of the following social media comment.\n"
    "Classify it as exactly one of: positive, neutral, negative.\n"
    "Only output the single word classification, nothing else.\n"
    "\n"
    "Comment: {text}\n"
    "\n"
    "Sentiment:";

struct AnnotatorConfig {
  std::string endpoint;  // e.g. http://localhost:8000/v1/completions
  std::string model_name;
  std::string prompt_template{kDefaultSentimentPrompt};
  std::size_t max_retries = 2;
  double timeout_seconds = 30.0;
  std::size_t max_in_flight = 4;
  /// Passed through verbatim into the request body (temperature, max_tokens, ...).
  nlohmann::json decoding = nlohmann::json::object();

  /// Throws std::invalid_argument unless the template holds exactly one "{text}".
  void validate() const;
};

std::string render_prompt(std::string_view prompt_template, std::string_view text);

/// Hex BLAKE2b-128 of the prompt template; part of the label cache key.
std::string prompt_hash(std::string_view prompt_template);

class AnnotationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Transport for the annotator. `complete` returns the raw model output for a
/// prompt or throws (any std::exception counts as a transient failure).
class CompletionService {
 public:
  virtual ~CompletionService() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Single-turn HTTP POST. Request body: {"model": ..., "prompt": ..., <decoding...>}.
/// The completion is read from the first present of: "text", "response",
/// "choices"[0]."text", "choices"[0]."message"."content".
class HttpCompletionService final : public CompletionService {
 public:
  explicit HttpCompletionService(AnnotatorConfig config);
  std::string complete(const std::string& prompt) override;

  static std::string extract_completion(const nlohmann::json& body);

 private:
  AnnotatorConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Case-insensitive, whitespace-trimmed parse of exactly one label word.
std::optional<Sentiment> parse_model_response(std::string_view response);

/// Renders the prompt, calls the service, retries non-parseable or failed calls
/// up to config.max_retries times, then throws AnnotationFailure.
SentimentScore annotate(const UnifiedPost& post, const AnnotatorConfig& config, CompletionService& service);

// ---------------------------------------------------------------------------
// Label cache: JSONL of {post_id, label, model_name, prompt_hash}

struct LabelRecord {
  std::string post_id;
  Sentiment label = Sentiment::neutral;
  std::string model_name;
  std::string prompt_hash;
};

class LabelCache {
 public:
  static LabelCache load(const std::filesystem::path& path);  // missing file -> empty cache
  void save(const std::filesystem::path& path) const;

  [[nodiscard]] std::optional<Sentiment> find(const std::string& post_id) const;
  /// Lookup restricted to labels produced by `model_name` under `prompt_hash`.
  [[nodiscard]] std::optional<Sentiment> find(const std::string& post_id, const std::string& model_name,
                                              const std::string& prompt_hash) const;
  void put(LabelRecord record);
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] const std::map<std::string, LabelRecord>& records() const { return records_; }

 private:
  std::map<std::string, LabelRecord> records_;  // by post_id
};

struct AnnotationSummary {
  std::size_t cached = 0;
  std::size_t annotated = 0;
  std::size_t failed = 0;
};

/// Labels every post not already in the cache (for this model and prompt), with up
/// to config.max_in_flight concurrent requests. Failed posts stay unlabeled.
AnnotationSummary annotate_corpus(const std::vector<EventRecord>& events, const AnnotatorConfig& config,
                                  CompletionService& service, LabelCache& cache);

/// Copies cached labels onto posts. Unlabeled posts are dropped (the default
/// failure policy); returns the number dropped.
std::size_t apply_labels(std::vector<EventRecord>& events, const LabelCache& cache);

// ---------------------------------------------------------------------------
// Verification statistics

/// Cohen's kappa with marginal-product chance agreement. Returns 1.0 when chance
/// agreement is 1 (both raters constant on the same class).
template <class T>
double cohens_kappa(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cohens_kappa: length mismatch");
  if (a.empty()) throw std::invalid_argument("cohens_kappa: empty input");
  const double n = static_cast<double>(a.size());
  std::map<T, std::pair<double, double>> marginals;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    marginals[a[i]].first += 1.0;
    marginals[b[i]].second += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [cls, counts] : marginals) p_e += (counts.first / n) * (counts.second / n);
  if (p_e >= 1.0) return 1.0;
  return (p_o - p_e) / (1.0 - p_e);
}

template <class T>
double cohens_kappa(const std::vector<T>& a, const std::vector<T>& b) {
  return cohens_kappa(std::span<const T>(a), std::span<const T>(b));
}

/// sqrt(4 * alpha * kappa_t / c_t): standard-deviation bound on the bin-mean
/// sentiment error. Throws std::domain_error outside c_t >= 1, alpha in [0,1], kappa_t >= 1.
double aggregation_noise_bound(double c_t, double alpha, double kappa_t = 1.0);

struct VerificationRecord {
  std::string post_id;
  Sentiment llm = Sentiment::neutral;
  Sentiment human_a = Sentiment::neutral;
  Sentiment human_b = Sentiment::neutral;
  Sentiment consensus = Sentiment::neutral;
  Category category = Category::natural_disaster;
};

struct VerificationReport {
  double kappa = 0.0;
  double overall_agreement = 0.0;
  std::map<Sentiment, double> per_class_f1;
  /// Strata keyed by (category, LLM-assigned class); nullopt marks an empty stratum.
  std::map<std::pair<Category, Sentiment>, std::optional<double>> per_stratum_accuracy;
  double bias_mu = 0.0;

  [[nodiscard]] nlohmann::json to_json() const;
};

VerificationReport verification_report(std::span<const VerificationRecord> records);

/// CSV with header post_id,llm,human_a,human_b,consensus,category.
std::vector<VerificationRecord> read_verification_csv(const std::filesystem::path& path);

}  // namespace eventcast
