#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace eventcast {

/// Thrown when a textual enum value or a serialized record cannot be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Platform { twitter, reddit, threads, synthetic };
enum class InteractionKind { root, reply, repost };
enum class Sentiment { positive, neutral, negative };
enum class Category { natural_disaster, political, social_movement, technology, sports_entertainment };

inline constexpr Category kAllCategories[] = {Category::natural_disaster, Category::political,
                                              Category::social_movement, Category::technology,
                                              Category::sports_entertainment};
inline constexpr Sentiment kAllSentiments[] = {Sentiment::positive, Sentiment::neutral,
                                               Sentiment::negative};

std::string_view to_string(Platform p);
std::string_view to_string(InteractionKind k);
std::string_view to_string(Sentiment s);
std::string_view to_string(Category c);

Platform parse_platform(std::string_view s);
InteractionKind parse_interaction_kind(std::string_view s);
Category parse_category(std::string_view s);

/// Parses "positive" / "neutral" / "negative" (exact, lowercase).
Sentiment map_label(std::string_view label);

/// Sentiment score in {-1, 0, +1}.
class SentimentScore {
 public:
  explicit SentimentScore(Sentiment s);
  /// Throws std::invalid_argument outside {-1, 0, +1}.
  static SentimentScore from_value(int value);

  [[nodiscard]] int value() const { return value_; }
  [[nodiscard]] Sentiment label() const;

  friend bool operator==(SentimentScore, SentimentScore) = default;

 private:
  int value_ = 0;
};

inline int score(Sentiment s) { return SentimentScore(s).value(); }

/// One platform-normalized post. Identifiers are anonymized before anything
/// downstream of ingestion sees them.
struct UnifiedPost {
  std::string post_id;
  std::string event_id;
  Platform platform = Platform::synthetic;
  std::int64_t timestamp_utc = 0;
  std::string text;
  std::optional<std::string> parent_id;
  InteractionKind interaction_kind = InteractionKind::root;
  std::optional<Sentiment> sentiment;
  /// Anonymized author handle. Only used to derive stable display pseudonyms.
  std::optional<std::string> author_id;

  /// Throws std::invalid_argument when a schema invariant is violated.
  void validate() const;

  friend bool operator==(const UnifiedPost&, const UnifiedPost&) = default;
};

/// Chronological order with post_id as the tie breaker.
bool chronological_less(const UnifiedPost& a, const UnifiedPost& b);

struct EventRecord {
  std::string event_id;
  Category category = Category::natural_disaster;
  std::vector<UnifiedPost> posts;

  void sort_posts();
};

nlohmann::json to_json(const UnifiedPost& post);
/// Throws ParseError on missing or mistyped fields.
UnifiedPost post_from_json(const nlohmann::json& j);

/// One JSON object per line, no trailing spaces.
std::string to_jsonl_line(const UnifiedPost& post);

}  // namespace eventcast
