#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "eventcast/corpus.hpp"
#include "eventcast/series.hpp"

namespace eventcast {

inline constexpr std::size_t kMaxThreads = 3;
inline constexpr std::size_t kMaxRepliesPerThread = 2;
inline constexpr std::size_t kTokenSlots = kMaxThreads * (1 + kMaxRepliesPerThread);
inline constexpr std::size_t kMaxViewChars = 1500;

struct Thread {
  std::string main;
  std::vector<std::string> replies;  // chronological

  friend bool operator==(const Thread&, const Thread&) = default;
};

struct BinSelection {
  std::int64_t bin_start_utc = 0;
  std::vector<Thread> threads;
  /// Earliest posts of a bin that holds no root post.
  std::vector<std::string> fallback_singletons;

  [[nodiscard]] bool empty() const { return threads.empty() && fallback_singletons.empty(); }
  /// Selected ids in thread order (main, its replies, next main, ...).
  [[nodiscard]] std::vector<std::string> post_ids() const;

  friend bool operator==(const BinSelection&, const BinSelection&) = default;
};

/// Roots ranked by the number of their direct children inside the same bin
/// (descending), then timestamp, then post_id; the top three keep their two
/// earliest in-bin children. A bin without roots falls back to its three
/// earliest posts.
BinSelection select_posts(std::int64_t bin_start_utc, std::span<const UnifiedPost> bin_posts);

/// Per-event display names User1, User2, ... by first chronological appearance of
/// the author (or of the post itself when the author is unknown).
class Pseudonyms {
 public:
  static Pseudonyms for_event(const EventRecord& event);
  [[nodiscard]] std::string name(const UnifiedPost& post) const;

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

struct ViewPost {
  std::string display_name;
  std::string text;
  std::int64_t timestamp_utc = 0;
};

using ViewTexts = std::unordered_map<std::string, ViewPost>;

/// Throws std::invalid_argument if a selected id has no entry in `texts`.
std::string render_structured(const BinSelection& selection, const ViewTexts& texts,
                              std::size_t max_chars = kMaxViewChars);
std::string render_flat(const BinSelection& selection, const ViewTexts& texts, std::size_t max_chars = kMaxViewChars);

struct TokenMeta {
  std::size_t slot = 0;
  std::optional<std::string> post_id;
  int type_id = 0;  // 0 main, 1 reply or repost
  std::size_t thread_id = 0;
  bool valid = false;

  friend bool operator==(const TokenMeta&, const TokenMeta&) = default;
};

/// Nine slots laid out as thread * 3 + position; unused slots are invalid.
/// `kinds` gives the interaction kind of fallback singletons.
std::array<TokenMeta, kTokenSlots> export_token_meta(
    const BinSelection& selection, const std::unordered_map<std::string, InteractionKind>& kinds = {});

struct BinView {
  std::int64_t bin_start_utc = 0;
  std::string flat;
  std::string structured;
  std::array<TokenMeta, kTokenSlots> tokens{};
};

/// One view per series bin, built from the event's labeled posts.
std::vector<BinView> build_views(const EventRecord& event, const EventSeries& series);

nlohmann::json to_json(const BinView& view);
std::string views_to_jsonl(std::span<const BinView> views);
void write_views(std::span<const BinView> views, const std::filesystem::path& path);
std::vector<BinView> read_views(const std::filesystem::path& path);

}  // namespace eventcast
