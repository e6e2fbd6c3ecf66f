#include "eventcast/corpus.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "eventcast/unicode_text.hpp"

namespace eventcast {

namespace {

template <class Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view what) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  throw ParseError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, Platform>, 4> kPlatforms{{
    {"twitter", Platform::twitter},
    {"reddit", Platform::reddit},
    {"threads", Platform::threads},
    {"synthetic", Platform::synthetic},
}};

constexpr std::array<std::pair<std::string_view, InteractionKind>, 3> kKinds{{
    {"root", InteractionKind::root},
    {"reply", InteractionKind::reply},
    {"repost", InteractionKind::repost},
}};

constexpr std::array<std::pair<std::string_view, Sentiment>, 3> kSentiments{{
    {"positive", Sentiment::positive},
    {"neutral", Sentiment::neutral},
    {"negative", Sentiment::negative},
}};

constexpr std::array<std::pair<std::string_view, Category>, 5> kCategories{{
    {"natural_disaster", Category::natural_disaster},
    {"political", Category::political},
    {"social_movement", Category::social_movement},
    {"technology", Category::technology},
    {"sports_entertainment", Category::sports_entertainment},
}};

template <class Enum, std::size_t N>
std::string_view name_of(Enum v, const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const nlohmann::json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' is not a string");
  return v.get<std::string>();
}

}  // namespace

std::string_view to_string(Platform p) { return name_of(p, kPlatforms); }
std::string_view to_string(InteractionKind k) { return name_of(k, kKinds); }
std::string_view to_string(Sentiment s) { return name_of(s, kSentiments); }
std::string_view to_string(Category c) { return name_of(c, kCategories); }

Platform parse_platform(std::string_view s) { return parse_enum(s, kPlatforms, "platform"); }
InteractionKind parse_interaction_kind(std::string_view s) {
  return parse_enum(s, kKinds, "interaction kind");
}
Category parse_category(std::string_view s) { return parse_enum(s, kCategories, "category"); }
Sentiment map_label(std::string_view label) { return parse_enum(label, kSentiments, "sentiment label"); }

SentimentScore::SentimentScore(Sentiment s)
    : value_(s == Sentiment::positive ? 1 : s == Sentiment::neutral ? 0 : -1) {}

SentimentScore SentimentScore::from_value(int value) {
  switch (value) {
    case 1: return SentimentScore(Sentiment::positive);
    case 0: return SentimentScore(Sentiment::neutral);
    case -1: return SentimentScore(Sentiment::negative);
    default: throw std::invalid_argument("sentiment score outside {-1, 0, +1}");
  }
}

Sentiment SentimentScore::label() const {
  return value_ > 0 ? Sentiment::positive : value_ == 0 ? Sentiment::neutral : Sentiment::negative;
}

void UnifiedPost::validate() const {
  if (timestamp_utc <= 0) throw std::invalid_argument("post " + post_id + ": timestamp must be positive");
  if (trim(text).empty()) throw std::invalid_argument("post " + post_id + ": empty text");
  if (parent_id.has_value() != (interaction_kind != InteractionKind::root)) {
    throw std::invalid_argument("post " + post_id + ": parent_id must be present iff not a root post");
  }
  if (parent_id && *parent_id == post_id) {
    throw std::invalid_argument("post " + post_id + ": post cannot be its own parent");
  }
}

bool chronological_less(const UnifiedPost& a, const UnifiedPost& b) {
  if (a.timestamp_utc != b.timestamp_utc) return a.timestamp_utc < b.timestamp_utc;
  return a.post_id < b.post_id;
}

void EventRecord::sort_posts() {
  std::stable_sort(posts.begin(), posts.end(), chronological_less);
}

nlohmann::json to_json(const UnifiedPost& post) {
  nlohmann::json j;
  j["post_id"] = post.post_id;
  j["event_id"] = post.event_id;
  j["platform"] = to_string(post.platform);
  j["timestamp_utc"] = post.timestamp_utc;
  j["text"] = post.text;
  j["parent_id"] = post.parent_id ? nlohmann::json(*post.parent_id) : nlohmann::json(nullptr);
  j["interaction_kind"] = to_string(post.interaction_kind);
  j["sentiment"] = post.sentiment ? nlohmann::json(to_string(*post.sentiment)) : nlohmann::json(nullptr);
  if (post.author_id) j["author_id"] = *post.author_id;
  return j;
}

UnifiedPost post_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("post record is not a JSON object");
  UnifiedPost p;
  p.post_id = require_string(j, "post_id");
  p.event_id = require_string(j, "event_id");
  p.platform = parse_platform(require_string(j, "platform"));
  const auto& ts = require(j, "timestamp_utc");
  if (!ts.is_number_integer()) throw ParseError("field 'timestamp_utc' is not an integer");
  p.timestamp_utc = ts.get<std::int64_t>();
  p.text = require_string(j, "text");
  p.interaction_kind = parse_interaction_kind(require_string(j, "interaction_kind"));
  if (auto it = j.find("parent_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError("field 'parent_id' is not a string");
    p.parent_id = it->get<std::string>();
  }
  if (auto it = j.find("sentiment"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError("field 'sentiment' is not a string");
    p.sentiment = map_label(it->get<std::string>());
  }
  if (auto it = j.find("author_id"); it != j.end() && it->is_string()) {
    p.author_id = it->get<std::string>();
  }
  return p;
}

std::string to_jsonl_line(const UnifiedPost& post) {
  return to_json(post).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace eventcast
