#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "eventcast/corpus.hpp"

namespace eventcast {

// ---------------------------------------------------------------------------
// Calendar grid

enum class Granularity { day, half_day, quarter_day };

inline constexpr Granularity kAllGranularities[] = {Granularity::day, Granularity::half_day,
                                                    Granularity::quarter_day};

std::string_view to_string(Granularity g);  // "1d", "12h", "6h"
Granularity parse_granularity(std::string_view s);
std::int64_t width_seconds(Granularity g);

struct WindowShape {
  std::size_t lookback = 0;
  std::size_t horizon = 0;
};

/// (14, 7) for 1d, (28, 14) for 12h, (56, 28) for 6h.
WindowShape window_shape(Granularity g);

/// Start of the half-open UTC-anchored bin containing `timestamp_utc`.
std::int64_t assign_bin(std::int64_t timestamp_utc, Granularity g);

// ---------------------------------------------------------------------------
// Series model

enum class Split { train, val, test };
enum class Target { intensity, polarity };

inline constexpr Target kAllTargets[] = {Target::intensity, Target::polarity};

std::string_view to_string(Split s);
Split parse_split(std::string_view s);
std::string_view to_string(Target t);  // "count", "sentiment"
Target parse_target(std::string_view s);

struct Bin {
  std::int64_t bin_start_utc = 0;
  std::optional<std::int64_t> count;  // missing iff the bin holds no posts
  std::optional<double> sentiment;    // missing iff count is missing
  Split split = Split::train;
  std::optional<double> count_filled;  // after split-local imputation
  std::optional<double> sentiment_filled;
  std::optional<double> count_z;
  std::optional<double> sentiment_z;
  std::optional<double> reply_ratio;  // defined for bins with at least one post
};

struct NormStats {
  double mu_c = 0.0;
  double sigma_c = 0.0;
  double mu_s = 0.0;
  double sigma_s = 0.0;
};

struct EventSeries {
  std::string event_id;
  Category category = Category::natural_disaster;
  Granularity granularity = Granularity::day;
  std::vector<Bin> bins;
  NormStats norm_stats;
  /// Diagnostics such as "val_all_missing".
  std::vector<std::string> flags;

  [[nodiscard]] std::size_t size() const { return bins.size(); }
  [[nodiscard]] std::optional<double> normalized(std::size_t i, Target t) const {
    return t == Target::intensity ? bins[i].count_z : bins[i].sentiment_z;
  }
};

/// An (event, granularity) pair that cannot yield a usable series.
class SeriesRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Operations

struct Targets {
  std::optional<std::int64_t> count;
  std::optional<double> sentiment;
};

/// c_t = |P_t| and the mean score; both missing for an empty bin.
Targets derive_targets(std::span<const SentimentScore> bin_scores);

struct ActivePeriod {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
  friend bool operator==(const ActivePeriod&, const ActivePeriod&) = default;
};

/// tau = 0.05 * mean(counts); scans inward from both ends to the first bins with
/// count >= tau. Returns nullopt when no bin reaches tau (all-zero input).
std::optional<ActivePeriod> detect_active_period(std::span<const std::int64_t> counts);

inline constexpr std::size_t kMinBins = 21;

bool enforce_min_bins(std::size_t n_bins, std::size_t min_bins = kMinBins);
inline bool enforce_min_bins(const EventSeries& s, std::size_t min_bins = kMinBins) {
  return enforce_min_bins(s.size(), min_bins);
}

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

/// floor(0.7 n) train, floor(0.1 n) val, remainder test.
SplitSizes split_sizes(std::size_t n_bins);
std::vector<Split> chronological_split(std::size_t n_bins);

struct ImputedSequence {
  std::vector<std::optional<double>> values;
  std::vector<Split> fully_missing_segments;
};

/// Forward fill inside each contiguous segment, then back-fill any leading gap from
/// the first later observation of the same segment. Nothing crosses a segment edge.
ImputedSequence impute_segments(std::span<const std::optional<double>> values, std::span<const Split> splits);

/// Fills count_filled / sentiment_filled and records fully missing segments in flags.
void impute_split_local(EventSeries& series);

/// Population mean and standard deviation of the train segment, applied to every
/// split. sigma == 0 maps the variable to the constant zero series.
/// Throws SeriesRejected when the train segment has no observation.
void zscore_normalize(EventSeries& series);

struct ForecastWindow {
  std::string event_id;
  Category category = Category::natural_disaster;
  Target target = Target::intensity;
  std::size_t start = 0;  // index of the first lookback bin
  std::vector<double> lookback;
  std::vector<double> horizon;
  Split split = Split::train;
  std::vector<std::size_t> horizon_bin_indices;
};

/// Stride-1 windows over the normalized target. A window takes the split holding
/// its whole horizon; straddling windows are dropped, except that the final window
/// (horizon = last H bins) is always a test window. Windows touching a missing
/// normalized value are skipped.
std::vector<ForecastWindow> make_windows(const EventSeries& series, Target target, std::size_t lookback,
                                         std::size_t horizon);

// ---------------------------------------------------------------------------
// End-to-end construction

struct BuildOptions {
  std::size_t min_bins = kMinBins;
};

struct BuildOutcome {
  std::optional<EventSeries> series;
  std::string dropped_reason;  // empty when series is set
  std::size_t active_posts = 0;
};

/// Bins labeled posts, trims to the active period, derives targets, splits, imputes,
/// normalizes and attaches reply ratios. `replied_to` is the set of post ids that
/// receive at least one reply anywhere in the event.
BuildOutcome build_series(const EventRecord& event, Granularity g,
                          const std::unordered_set<std::string>& replied_to, const BuildOptions& options = {});

/// Start (inclusive) and end (exclusive) of the series' calendar span.
std::pair<std::int64_t, std::int64_t> series_span(const EventSeries& series);

// CSV: bin_start_utc,count,sentiment,count_z,sentiment_z,split,reply_ratio (missing = empty cell)
std::string series_to_csv(const EventSeries& series);
nlohmann::json series_sidecar(const EventSeries& series);
void write_series(const EventSeries& series, const std::filesystem::path& dir);
EventSeries read_series(const std::filesystem::path& csv_path);
/// Every series of one granularity under <series_root>/<g>/, sorted by event_id.
std::vector<EventSeries> read_series_dir(const std::filesystem::path& series_root, Granularity g);

}  // namespace eventcast
