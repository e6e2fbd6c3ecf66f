#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "eventcast/corpus.hpp"

namespace eventcast {

// ---------------------------------------------------------------------------
// Anonymization

/// Keyed BLAKE2b over raw identifiers. The key is derived from a salt of any
/// length; output is 16 bytes, hex encoded.
class Anonymizer {
 public:
  explicit Anonymizer(std::string_view salt);
  /// `scope` keeps identically-spelled ids from different platforms apart.
  [[nodiscard]] std::string anonymize(std::string_view scope, std::string_view raw_id) const;

 private:
  std::array<unsigned char, 32> key_{};
};

// ---------------------------------------------------------------------------
// Schema unification

struct Rejection {
  std::string reason;  // e.g. "missing_field:timestamp"
  std::string detail;
};

/// A unified post plus the event metadata carried by its raw record.
struct UnifiedRecord {
  UnifiedPost post;
  std::optional<Category> category;
};

using UnifyResult = std::variant<UnifiedRecord, Rejection>;

/// Maps one raw platform record to the unified schema. Field adapters:
///  twitter:   id|id_str, created_at, full_text|text, in_reply_to_status_id[_str] (reply),
///             quoted_status_id[_str] | retweeted_status_id[_str] (repost), user_id|user.id_str
///  reddit:    id|name, created_utc, body | title+selftext, parent_id "t1_x"/"t3_x" (reply,
///             type prefix stripped so it matches the parent's id), author
///  threads:   id, timestamp|taken_at, text, replied_to_id|reply_to_id (reply),
///             quoted_post_id|reposted_id (repost), username
///  synthetic: post_id, timestamp_utc, text, parent_id, interaction_kind, author_id
/// Every record must also carry "platform" and "event_id"; "category" is optional.
UnifyResult unify(const nlohmann::json& raw_record, const Anonymizer& anonymizer);

// ---------------------------------------------------------------------------
// Post-level filtering

enum class FilterRule { short_text, emoji_only, url_spam, non_english, duplicate_text, id_duplicate };

std::string_view to_string(FilterRule rule);

struct FilterOutcome {
  bool kept = true;
  std::optional<FilterRule> removed_by;

  static FilterOutcome keep() { return {}; }
  static FilterOutcome remove(FilterRule r) { return {false, r}; }
  friend bool operator==(const FilterOutcome&, const FilterOutcome&) = default;
};

enum class LanguageVerdict { english, non_english, unknown };

/// Pluggable language identification for rule (iv).
class LanguageDetector {
 public:
  virtual ~LanguageDetector() = default;
  /// `unknown` means the detector could not decide; callers treat it as English.
  [[nodiscard]] virtual LanguageVerdict detect(std::string_view text) const = 0;
};

/// Dependency-free default: ratio of ASCII letters among all letters, plus the
/// share of word tokens drawn from the 50 most frequent English words.
class StopwordLanguageDetector final : public LanguageDetector {
 public:
  static constexpr double kMinAsciiLetterRatio = 0.85;
  static constexpr double kMinStopwordShare = 0.08;

  [[nodiscard]] LanguageVerdict detect(std::string_view text) const override;
};

struct FilterThresholds {
  std::size_t min_stripped_chars = 5;
  std::size_t min_letters = 5;
  double max_url_share = 0.5;
  std::size_t min_chars_for_language = 20;
};

struct FilterDiagnostics {
  std::size_t language_unknown = 0;
};

/// Evaluates rules (i)-(v) in priority order and returns the first match.
/// `seen_normalized` holds normalized texts of posts already kept in this event.
FilterOutcome filter_post(const UnifiedPost& post, const std::unordered_set<std::string>& seen_normalized,
                          const LanguageDetector& detector, const FilterThresholds& thresholds = {},
                          FilterDiagnostics* diagnostics = nullptr);

/// Applies filter_post in chronological order with an event-local seen set.
/// Returns the kept posts; increments `removed[rule]` for each removal.
std::vector<UnifiedPost> filter_event_posts(const std::vector<UnifiedPost>& posts, const LanguageDetector& detector,
                                            std::map<FilterRule, std::size_t>& removed,
                                            FilterDiagnostics& diagnostics,
                                            const FilterThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Event-level filtering

struct EventThresholds {
  std::size_t min_posts = 50;
  double min_span_days = 3.0;
  double min_density = 3.0;  // posts per day
};

struct EventStats {
  std::size_t posts = 0;
  double span_days = 0.0;
  double density = 0.0;
};

struct EventFilterResult {
  bool kept = false;
  EventStats stats;
};

EventFilterResult filter_event(const EventRecord& event, const EventThresholds& thresholds = {});

/// One post per post_id, keeping the first in (timestamp, post_id) order. Output is
/// sorted chronologically.
std::vector<UnifiedPost> deduplicate_ids(std::vector<UnifiedPost> posts);

// ---------------------------------------------------------------------------
// Directory ingestion

struct IngestOptions {
  std::string salt;
  EventThresholds event_thresholds;
  FilterThresholds filter_thresholds;
  /// Fraction of unparseable or rejected lines in one file above which ingestion fails.
  double max_schema_failure_rate = 0.5;
  std::size_t jobs = 1;
  /// Value for the report's "generated_at" field; empty means wall-clock now.
  std::string generated_at;
};

struct EventReport {
  std::string event_id;
  std::optional<Category> category;
  std::size_t unified = 0;
  std::size_t after_id_dedup = 0;
  std::map<FilterRule, std::size_t> removed;
  std::size_t retained = 0;
  bool kept = false;
  EventStats stats;
  std::size_t language_unknown = 0;
  /// Set when the event was dropped for a reason other than the thresholds.
  std::string note;
};

struct FileReport {
  std::string file;
  std::size_t lines = 0;
  std::size_t corrupt_lines = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> rejection_reasons;
};

struct IngestReport {
  std::vector<FileReport> files;
  std::vector<EventReport> events;
  std::string generated_at;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Thrown when a raw file exceeds the schema failure budget.
class SchemaFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IngestResult {
  std::vector<EventRecord> events;  // kept events only, sorted by event_id
  IngestReport report;
};

/// Reads every *.jsonl file in `raw_dir` (sorted by name) and runs unify, id dedup,
/// post filters and event thresholds. Throws MissingArtifact / SchemaFailure.
IngestResult ingest_directory(const std::filesystem::path& raw_dir, const IngestOptions& options,
                              const LanguageDetector& detector);

/// Writes <out>/events/<event_id>.jsonl, <out>/events.json and <out>/filter_report.json.
void write_ingest_output(const IngestResult& result, const std::filesystem::path& out_dir);

/// Reads the per-event corpus written by write_ingest_output.
std::vector<EventRecord> read_corpus(const std::filesystem::path& corpus_dir);

}  // namespace eventcast
