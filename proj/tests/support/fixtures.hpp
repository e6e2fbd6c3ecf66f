#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include "eventcast/corpus.hpp"
#include "eventcast/io.hpp"

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "eventcast") {
    static std::atomic<unsigned> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline eventcast::UnifiedPost post(std::string id, std::int64_t ts, std::string text = "some words here",
                                   std::optional<std::string> parent = std::nullopt,
                                   eventcast::InteractionKind kind = eventcast::InteractionKind::root) {
  eventcast::UnifiedPost p;
  p.post_id = std::move(id);
  p.event_id = "ev";
  p.timestamp_utc = ts;
  p.text = std::move(text);
  p.parent_id = std::move(parent);
  if (p.parent_id && kind == eventcast::InteractionKind::root) kind = eventcast::InteractionKind::reply;
  p.interaction_kind = kind;
  p.sentiment = eventcast::Sentiment::neutral;
  return p;
}

/// 2022-02-04T00:00:00Z
inline constexpr std::int64_t kFeb4 = 1643932800;

}  // namespace fixtures
