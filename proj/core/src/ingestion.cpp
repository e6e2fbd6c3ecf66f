#include "eventcast/ingestion.hpp"

#include <sodium.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "eventcast/io.hpp"
#include "eventcast/unicode_text.hpp"

namespace eventcast {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Anonymizer

Anonymizer::Anonymizer(std::string_view salt) {
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
  crypto_generichash(key_.data(), key_.size(), reinterpret_cast<const unsigned char*>(salt.data()), salt.size(),
                     nullptr, 0);
}

std::string Anonymizer::anonymize(std::string_view scope, std::string_view raw_id) const {
  std::string message;
  message.reserve(scope.size() + 1 + raw_id.size());
  message.append(scope).push_back(':');
  message.append(raw_id);
  std::array<unsigned char, 16> digest{};
  crypto_generichash(digest.data(), digest.size(), reinterpret_cast<const unsigned char*>(message.data()),
                     message.size(), key_.data(), key_.size());
  return to_hex(digest.data(), digest.size());
}

// ---------------------------------------------------------------------------
// unify

namespace {

// A field read as an identifier: strings as-is, integers in decimal.
std::optional<std::string> id_field(const json& j, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) continue;
    if (it->is_string()) {
      auto s = it->get<std::string>();
      if (!s.empty()) return s;
    } else if (it->is_number_integer()) {
      return std::to_string(it->get<std::int64_t>());
    } else if (it->is_number_unsigned()) {
      return std::to_string(it->get<std::uint64_t>());
    }
  }
  return std::nullopt;
}

std::optional<std::string> string_field(const json& j, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = j.find(key);
    if (it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return std::nullopt;
}

struct TimestampLookup {
  bool present = false;
  std::optional<std::int64_t> value;
};

TimestampLookup timestamp_field(const json& j, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) continue;
    if (it->is_number_integer()) return {true, it->get<std::int64_t>()};
    if (it->is_number_float()) return {true, static_cast<std::int64_t>(std::floor(it->get<double>()))};
    if (it->is_string()) return {true, parse_timestamp(it->get<std::string>())};
    return {true, std::nullopt};
  }
  return {};
}

std::string strip_reddit_prefix(std::string id) {
  // Fullnames look like t1_abc (comment) or t3_abc (submission).
  if (id.size() > 3 && id[0] == 't' && id[2] == '_' && id[1] >= '1' && id[1] <= '6') return id.substr(3);
  return id;
}

bool safe_event_id(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.';
  });
}

struct RawFields {
  std::optional<std::string> id;
  TimestampLookup timestamp;
  std::optional<std::string> text;
  std::optional<std::string> parent;
  InteractionKind kind = InteractionKind::root;
  std::optional<std::string> author;
};

RawFields adapt_twitter(const json& r) {
  RawFields f;
  f.id = id_field(r, {"id_str", "id"});
  f.timestamp = timestamp_field(r, {"created_at", "timestamp_utc"});
  f.text = string_field(r, {"full_text", "text"});
  if (auto reply = id_field(r, {"in_reply_to_status_id_str", "in_reply_to_status_id"})) {
    f.parent = reply;
    f.kind = InteractionKind::reply;
  } else if (auto quote = id_field(r, {"quoted_status_id_str", "quoted_status_id", "retweeted_status_id_str",
                                       "retweeted_status_id"})) {
    f.parent = quote;
    f.kind = InteractionKind::repost;
  }
  f.author = id_field(r, {"user_id_str", "user_id"});
  if (!f.author) {
    if (auto it = r.find("user"); it != r.end() && it->is_object()) f.author = id_field(*it, {"id_str", "id"});
  }
  return f;
}

RawFields adapt_reddit(const json& r) {
  RawFields f;
  f.id = id_field(r, {"id", "name"});
  if (f.id) f.id = strip_reddit_prefix(*f.id);
  f.timestamp = timestamp_field(r, {"created_utc", "created"});
  f.text = string_field(r, {"body"});
  if (!f.text) {
    auto title = string_field(r, {"title"});
    auto self = string_field(r, {"selftext"});
    if (title && self && !self->empty()) {
      f.text = *title + "\n" + *self;
    } else if (title) {
      f.text = title;
    } else {
      f.text = self;
    }
  }
  if (auto parent = id_field(r, {"parent_id"})) {
    f.parent = strip_reddit_prefix(*parent);
    f.kind = InteractionKind::reply;
  }
  f.author = id_field(r, {"author", "author_fullname"});
  return f;
}

RawFields adapt_threads(const json& r) {
  RawFields f;
  f.id = id_field(r, {"id", "post_id"});
  f.timestamp = timestamp_field(r, {"timestamp", "taken_at", "timestamp_utc"});
  f.text = string_field(r, {"text", "caption"});
  if (auto reply = id_field(r, {"replied_to_id", "reply_to_id"})) {
    f.parent = reply;
    f.kind = InteractionKind::reply;
  } else if (auto quote = id_field(r, {"quoted_post_id", "reposted_id"})) {
    f.parent = quote;
    f.kind = InteractionKind::repost;
  }
  f.author = id_field(r, {"username", "user_id"});
  return f;
}

RawFields adapt_synthetic(const json& r) {
  RawFields f;
  f.id = id_field(r, {"post_id"});
  f.timestamp = timestamp_field(r, {"timestamp_utc"});
  f.text = string_field(r, {"text"});
  f.parent = id_field(r, {"parent_id"});
  if (auto kind = string_field(r, {"interaction_kind"})) {
    f.kind = parse_interaction_kind(*kind);
  } else {
    f.kind = f.parent ? InteractionKind::reply : InteractionKind::root;
  }
  f.author = id_field(r, {"author_id"});
  return f;
}

Rejection reject(std::string reason, std::string detail = {}) { return {std::move(reason), std::move(detail)}; }

}  // namespace

UnifyResult unify(const json& raw, const Anonymizer& anonymizer) {
  if (!raw.is_object()) return reject("not_an_object");
  const auto platform_name = string_field(raw, {"platform"});
  if (!platform_name) return reject("missing_field:platform");
  Platform platform{};
  try {
    platform = parse_platform(*platform_name);
  } catch (const ParseError& e) {
    return reject("unknown_platform", e.what());
  }
  const auto event_id = id_field(raw, {"event_id"});
  if (!event_id) return reject("missing_field:event_id");
  if (!safe_event_id(*event_id)) return reject("invalid_field:event_id", *event_id);

  std::optional<Category> category;
  if (auto c = string_field(raw, {"category"})) {
    try {
      category = parse_category(*c);
    } catch (const ParseError& e) {
      return reject("invalid_field:category", e.what());
    }
  }

  RawFields f;
  try {
    switch (platform) {
      case Platform::twitter: f = adapt_twitter(raw); break;
      case Platform::reddit: f = adapt_reddit(raw); break;
      case Platform::threads: f = adapt_threads(raw); break;
      case Platform::synthetic: f = adapt_synthetic(raw); break;
    }
  } catch (const ParseError& e) {
    return reject("invalid_field:interaction_kind", e.what());
  }

  if (!f.id) return reject("missing_field:id");
  if (!f.timestamp.present) return reject("missing_field:timestamp");
  if (!f.timestamp.value || *f.timestamp.value <= 0) return reject("invalid_field:timestamp");
  if (!f.text) return reject("missing_field:text");
  if (trim(*f.text).empty()) return reject("empty_text");
  if (f.kind != InteractionKind::root && !f.parent) return reject("missing_field:parent_id");

  const std::string scope(to_string(platform));
  UnifiedPost post;
  post.post_id = anonymizer.anonymize(scope, *f.id);
  post.event_id = *event_id;
  post.platform = platform;
  post.timestamp_utc = *f.timestamp.value;
  post.text = std::move(*f.text);
  post.interaction_kind = f.kind;
  if (f.kind != InteractionKind::root) {
    if (*f.parent == *f.id) {
      post.interaction_kind = InteractionKind::root;  // self-links carry no relation
    } else {
      post.parent_id = anonymizer.anonymize(scope, *f.parent);
    }
  }
  if (f.author) post.author_id = anonymizer.anonymize(scope + ":user", *f.author);
  return UnifiedRecord{std::move(post), category};
}

// ---------------------------------------------------------------------------
// Filters

std::string_view to_string(FilterRule rule) {
  switch (rule) {
    case FilterRule::short_text: return "short_text";
    case FilterRule::emoji_only: return "emoji_only";
    case FilterRule::url_spam: return "url_spam";
    case FilterRule::non_english: return "non_english";
    case FilterRule::duplicate_text: return "duplicate_text";
    case FilterRule::id_duplicate: return "id_duplicate";
  }
  return "?";
}

namespace {

// Oxford English Corpus top-50 list, with "be" expanded by "is".
const std::unordered_set<std::string>& english_stopwords() {
  static const std::unordered_set<std::string> words{
      "the",  "be",   "to",    "of",   "and",  "a",     "in",   "that",  "have", "i",
      "it",   "for",  "not",   "on",   "with", "he",    "as",   "you",   "do",   "at",
      "this", "but",  "his",   "by",   "from", "they",  "we",   "say",   "her",  "she",
      "or",   "an",   "will",  "my",   "one",  "all",   "would", "there", "their", "what",
      "so",   "up",   "out",   "if",   "about", "who",  "get",  "which", "go",   "is"};
  return words;
}

}  // namespace

LanguageVerdict StopwordLanguageDetector::detect(std::string_view text) const {
  const std::u32string scalars = decode_utf8(text);
  std::size_t letters = 0;
  std::size_t ascii_letters = 0;
  std::vector<std::string> words;
  std::u32string word;
  auto flush = [&] {
    if (!word.empty()) words.push_back(encode_utf8(word));
    word.clear();
  };
  for (char32_t c : scalars) {
    if (is_letter(c)) {
      ++letters;
      if (c < 0x80) ++ascii_letters;
      word.push_back(c < 0x80 ? static_cast<char32_t>(std::tolower(static_cast<int>(c))) : c);
    } else if (c == U'\'' && !word.empty()) {
      word.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  if (letters == 0 || words.empty()) return LanguageVerdict::unknown;

  const double ascii_ratio = static_cast<double>(ascii_letters) / static_cast<double>(letters);
  const auto& stop = english_stopwords();
  const auto hits = std::count_if(words.begin(), words.end(), [&](const std::string& w) { return stop.count(w) > 0; });
  const double stop_share = static_cast<double>(hits) / static_cast<double>(words.size());
  if (ascii_ratio >= kMinAsciiLetterRatio && stop_share >= kMinStopwordShare) return LanguageVerdict::english;
  return LanguageVerdict::non_english;
}

FilterOutcome filter_post(const UnifiedPost& post, const std::unordered_set<std::string>& seen_normalized,
                          const LanguageDetector& detector, const FilterThresholds& thresholds,
                          FilterDiagnostics* diagnostics) {
  const std::string& text = post.text;

  // (i) short text
  if (scalar_count(trim(text)) < thresholds.min_stripped_chars) return FilterOutcome::remove(FilterRule::short_text);

  // (ii) emoji / symbol only: alphabetic scalars left after stripping emoji and punctuation
  std::size_t letters = 0;
  std::size_t total = 0;
  for (char32_t c : decode_utf8(text)) {
    ++total;
    if (is_emoji_or_symbol(c) || is_punctuation(c)) continue;
    if (is_letter(c)) ++letters;
  }
  if (letters < thresholds.min_letters) return FilterOutcome::remove(FilterRule::emoji_only);

  // (iii) URL spam
  std::size_t url_chars = 0;
  for (const UrlSpan& span : find_urls(text)) {
    url_chars += scalar_count(std::string_view(text).substr(span.begin, span.end - span.begin));
  }
  if (static_cast<double>(url_chars) > thresholds.max_url_share * static_cast<double>(total)) {
    return FilterOutcome::remove(FilterRule::url_spam);
  }

  // (iv) non-English, only on texts long enough for a reliable verdict
  const std::string without_urls = trim(strip_urls(text));
  if (scalar_count(without_urls) >= thresholds.min_chars_for_language) {
    switch (detector.detect(without_urls)) {
      case LanguageVerdict::non_english: return FilterOutcome::remove(FilterRule::non_english);
      case LanguageVerdict::unknown:
        if (diagnostics) ++diagnostics->language_unknown;
        break;
      case LanguageVerdict::english: break;
    }
  }

  // (v) within-event textual duplicate
  if (seen_normalized.count(normalize_text(text)) > 0) return FilterOutcome::remove(FilterRule::duplicate_text);
  return FilterOutcome::keep();
}

std::vector<UnifiedPost> filter_event_posts(const std::vector<UnifiedPost>& posts, const LanguageDetector& detector,
                                            std::map<FilterRule, std::size_t>& removed,
                                            FilterDiagnostics& diagnostics, const FilterThresholds& thresholds) {
  std::vector<const UnifiedPost*> order;
  order.reserve(posts.size());
  for (const auto& p : posts) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const UnifiedPost* a, const UnifiedPost* b) { return chronological_less(*a, *b); });

  std::unordered_set<std::string> seen;
  std::vector<UnifiedPost> kept;
  kept.reserve(posts.size());
  for (const UnifiedPost* p : order) {
    const FilterOutcome outcome = filter_post(*p, seen, detector, thresholds, &diagnostics);
    if (!outcome.kept) {
      ++removed[*outcome.removed_by];
      continue;
    }
    seen.insert(normalize_text(p->text));
    kept.push_back(*p);
  }
  return kept;
}

EventFilterResult filter_event(const EventRecord& event, const EventThresholds& thresholds) {
  EventFilterResult result;
  if (event.posts.empty()) return result;
  auto [lo, hi] = std::minmax_element(event.posts.begin(), event.posts.end(),
                                      [](const UnifiedPost& a, const UnifiedPost& b) {
                                        return a.timestamp_utc < b.timestamp_utc;
                                      });
  result.stats.posts = event.posts.size();
  result.stats.span_days = static_cast<double>(hi->timestamp_utc - lo->timestamp_utc) / 86400.0;
  result.stats.density =
      result.stats.span_days > 0.0 ? static_cast<double>(result.stats.posts) / result.stats.span_days : 0.0;
  result.kept = result.stats.posts >= thresholds.min_posts && result.stats.span_days >= thresholds.min_span_days &&
                result.stats.density >= thresholds.min_density;
  return result;
}

std::vector<UnifiedPost> deduplicate_ids(std::vector<UnifiedPost> posts) {
  std::stable_sort(posts.begin(), posts.end(), chronological_less);
  std::unordered_set<std::string> seen;
  std::vector<UnifiedPost> out;
  out.reserve(posts.size());
  for (auto& p : posts) {
    if (seen.insert(p.post_id).second) out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Directory ingestion

json IngestReport::to_json() const {
  json files_json = json::array();
  for (const auto& f : files) {
    json reasons = json::object();
    for (const auto& [reason, n] : f.rejection_reasons) reasons[reason] = n;
    files_json.push_back({{"file", f.file},
                          {"lines", f.lines},
                          {"corrupt_lines", f.corrupt_lines},
                          {"rejected", f.rejected},
                          {"rejection_reasons", reasons}});
  }
  json events_json = json::array();
  std::map<std::string, std::size_t> totals;
  std::size_t kept_events = 0;
  for (const auto& e : events) {
    json removed = json::object();
    for (FilterRule r : {FilterRule::id_duplicate, FilterRule::short_text, FilterRule::emoji_only,
                         FilterRule::url_spam, FilterRule::non_english, FilterRule::duplicate_text}) {
      const auto it = e.removed.find(r);
      const std::size_t n = it == e.removed.end() ? 0 : it->second;
      removed[std::string(to_string(r))] = n;
      totals[std::string(to_string(r))] += n;
    }
    if (e.kept) ++kept_events;
    events_json.push_back({{"event_id", e.event_id},
                           {"category", e.category ? json(to_string(*e.category)) : json(nullptr)},
                           {"unified", e.unified},
                           {"after_id_dedup", e.after_id_dedup},
                           {"removed", removed},
                           {"retained", e.retained},
                           {"kept", e.kept},
                           {"stats",
                            {{"posts", e.stats.posts},
                             {"span_days", e.stats.span_days},
                             {"density", e.stats.density}}},
                           {"language_unknown", e.language_unknown},
                           {"note", e.note}});
  }
  return {{"generated_at", generated_at},
          {"files", files_json},
          {"events", events_json},
          {"totals", {{"removed", totals}, {"events_seen", events.size()}, {"events_kept", kept_events}}}};
}

namespace {

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  return format_iso8601(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

}  // namespace

IngestResult ingest_directory(const fs::path& raw_dir, const IngestOptions& options,
                              const LanguageDetector& detector) {
  std::error_code ec;
  if (!fs::is_directory(raw_dir, ec)) throw UnreadableInput("raw directory not readable: " + raw_dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(raw_dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  if (ec) throw UnreadableInput("cannot list " + raw_dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  const Anonymizer anonymizer(options.salt);
  IngestResult result;
  result.report.generated_at = options.generated_at.empty() ? now_iso() : options.generated_at;

  struct Bucket {
    std::optional<Category> category;
    std::vector<UnifiedPost> posts;
  };
  std::map<std::string, Bucket> buckets;

  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UnreadableInput("cannot read " + path.string());
    FileReport fr;
    fr.file = path.filename().string();
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      ++fr.lines;
      json record = json::parse(line, nullptr, false);
      if (record.is_discarded()) {
        ++fr.corrupt_lines;
        spdlog::debug("{}:{}: corrupt JSON line skipped", fr.file, fr.lines);
        continue;
      }
      UnifyResult unified = unify(record, anonymizer);
      if (auto* rej = std::get_if<Rejection>(&unified)) {
        ++fr.rejected;
        ++fr.rejection_reasons[rej->reason];
        spdlog::debug("{}:{}: record rejected ({}) {}", fr.file, fr.lines, rej->reason, rej->detail);
        continue;
      }
      auto& rec = std::get<UnifiedRecord>(unified);
      auto& bucket = buckets[rec.post.event_id];
      if (!bucket.category && rec.category) bucket.category = rec.category;
      bucket.posts.push_back(std::move(rec.post));
    }
    if (in.bad()) throw UnreadableInput("read error on " + path.string());
    const std::size_t failures = fr.corrupt_lines + fr.rejected;
    if (fr.lines > 0 &&
        static_cast<double>(failures) > options.max_schema_failure_rate * static_cast<double>(fr.lines)) {
      throw SchemaFailure(fr.file + ": " + std::to_string(failures) + " of " + std::to_string(fr.lines) +
                          " records failed schema mapping");
    }
    if (failures > 0) spdlog::warn("{}: skipped {} corrupt and {} rejected records", fr.file, fr.corrupt_lines, fr.rejected);
    result.report.files.push_back(std::move(fr));
  }

  std::vector<std::pair<std::string, Bucket>> ordered(std::make_move_iterator(buckets.begin()),
                                                      std::make_move_iterator(buckets.end()));
  std::vector<EventReport> reports(ordered.size());
  std::vector<std::optional<EventRecord>> kept(ordered.size());

  parallel_for(ordered.size(), options.jobs, [&](std::size_t i) {
    auto& [event_id, bucket] = ordered[i];
    EventReport& rep = reports[i];
    rep.event_id = event_id;
    rep.category = bucket.category;
    rep.unified = bucket.posts.size();

    std::vector<UnifiedPost> unique = deduplicate_ids(std::move(bucket.posts));
    rep.after_id_dedup = unique.size();
    if (rep.after_id_dedup < rep.unified) rep.removed[FilterRule::id_duplicate] = rep.unified - rep.after_id_dedup;

    FilterDiagnostics diag;
    EventRecord event;
    event.event_id = event_id;
    event.posts = filter_event_posts(unique, detector, rep.removed, diag, options.filter_thresholds);
    event.sort_posts();
    rep.language_unknown = diag.language_unknown;
    rep.retained = event.posts.size();

    const EventFilterResult ef = filter_event(event, options.event_thresholds);
    rep.stats = ef.stats;
    rep.kept = ef.kept;
    if (rep.kept && !bucket.category) {
      rep.kept = false;
      rep.note = "missing_category";
    }
    if (rep.kept) {
      event.category = *bucket.category;
      kept[i] = std::move(event);
    }
  });

  for (auto& e : kept) {
    if (e) result.events.push_back(std::move(*e));
  }
  result.report.events = std::move(reports);
  if (result.report.events.empty()) spdlog::warn("no events found under {}", raw_dir.string());
  return result;
}

void write_ingest_output(const IngestResult& result, const fs::path& out_dir) {
  json manifest = json::array();
  for (const auto& event : result.events) {
    std::string content;
    for (const auto& post : event.posts) {
      content += to_jsonl_line(post);
      content.push_back('\n');
    }
    write_file(out_dir / "events" / (event.event_id + ".jsonl"), content);
    manifest.push_back(
        {{"event_id", event.event_id}, {"category", to_string(event.category)}, {"posts", event.posts.size()}});
  }
  write_file(out_dir / "events.json", manifest.dump(2) + "\n");
  write_file(out_dir / "filter_report.json", result.report.to_json().dump(2) + "\n");
}

std::vector<EventRecord> read_corpus(const fs::path& corpus_dir) {
  const fs::path manifest_path = corpus_dir / "events.json";
  if (!fs::exists(manifest_path)) throw MissingArtifact(manifest_path);
  const json manifest = json::parse(read_file(manifest_path));
  std::vector<EventRecord> events;
  for (const auto& entry : manifest) {
    EventRecord event;
    event.event_id = entry.at("event_id").get<std::string>();
    event.category = parse_category(entry.at("category").get<std::string>());
    const fs::path path = corpus_dir / "events" / (event.event_id + ".jsonl");
    if (!fs::exists(path)) throw MissingArtifact(path);
    for (const auto& line : read_lines(path)) {
      if (line.empty()) continue;
      event.posts.push_back(post_from_json(json::parse(line)));
    }
    event.sort_posts();
    events.push_back(std::move(event));
  }
  return events;
}

}  // namespace eventcast
