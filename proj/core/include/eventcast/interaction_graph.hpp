#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "eventcast/corpus.hpp"
#include "eventcast/series.hpp"

namespace eventcast {

struct InteractionEdge {
  std::string src;  // the reply or repost
  std::string dst;  // its parent
  InteractionKind kind = InteractionKind::reply;
  std::int64_t timestamp_utc = 0;
  bool dangling = false;  // parent not present in the event corpus

  friend bool operator==(const InteractionEdge&, const InteractionEdge&) = default;
};

/// One edge per post with a parent, in chronological order of the child.
std::vector<InteractionEdge> build_edges(const EventRecord& event);

/// Post ids that receive at least one reply or repost.
std::unordered_set<std::string> replied_targets(std::span<const InteractionEdge> edges);

/// Fraction of `bin_posts` that have a parent or appear in `replied_to`.
/// nullopt for an empty bin.
std::optional<double> reply_ratio(std::span<const UnifiedPost> bin_posts,
                                  const std::unordered_set<std::string>& replied_to);

/// Linear interpolation between closest ranks on the sorted sample; q in [0, 100].
double percentile(std::vector<double> sample, double q);

struct BinRef {
  std::string event_id;
  std::size_t bin_index = 0;

  friend bool operator==(const BinRef&, const BinRef&) = default;
  friend auto operator<=>(const BinRef&, const BinRef&) = default;
};

struct ScoredBin {
  BinRef bin;
  double reply_ratio = 0.0;
};

/// Test bins of every series with a defined reply ratio, pooled in input order.
std::vector<ScoredBin> pooled_test_bins(std::span<const EventSeries> series);

/// Bins whose ratio is at least the (100 - k)th percentile of the pooled ratios.
/// Throws std::invalid_argument for k outside (0, 100].
std::vector<BinRef> high_interaction_subset(std::span<const ScoredBin> test_bins, double k_percent);

std::string edges_to_csv(std::span<const InteractionEdge> edges);
void write_edges(std::span<const InteractionEdge> edges, const std::filesystem::path& path);
std::vector<InteractionEdge> read_edges(const std::filesystem::path& path);

}  // namespace eventcast
