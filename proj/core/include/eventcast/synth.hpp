#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "eventcast/annotation.hpp"
#include "eventcast/corpus.hpp"
#include "eventcast/ingestion.hpp"
#include "eventcast/series.hpp"

namespace eventcast {

enum class Regime { burst, sustained };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view s);

struct SynthSpec {
  std::string event_id = "synth-0";
  Category category = Category::natural_disaster;
  Regime regime = Regime::burst;
  double n_days = 30.0;
  double base_rate = 100.0;  // posts per day at the plateau
  double peak_multiplier = 5.0;
  double reply_prob = 0.4;
  /// Shift per day of the log-odds of positive over negative.
  double sentiment_drift = 0.0;
  /// Share of parented posts that are reposts rather than replies.
  double repost_share = 0.2;
  std::int64_t start_utc = 1640995200;  // 2022-01-01T00:00:00Z
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument for a zero-duration spec, negative rates or
  /// probabilities outside [0, 1].
  void validate() const;
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);

/// Hourly Poisson arrivals shaped by the regime; each post after the first
/// becomes a child of a uniformly chosen earlier post with probability reply_prob.
/// Posts carry raw (not anonymized) ids and their gold sentiment.
EventRecord generate_event(const SynthSpec& spec);

/// One raw synthetic-platform JSON record per post, in chronological order.
std::vector<nlohmann::json> raw_records(const EventRecord& event);

/// Gold labels keyed by the ids ingestion will assign under `anonymizer`.
std::vector<LabelRecord> gold_labels(const EventRecord& event, const Anonymizer& anonymizer);

/// Each label independently replaced, with probability alpha, by one of the two
/// other classes chosen uniformly.
std::vector<Sentiment> generate_label_noise(std::span<const Sentiment> gold, double alpha, std::uint64_t seed);

struct NoiseSimulation {
  double empirical_std = 0.0;  // of noisy bin mean minus gold bin mean
  double standard_error = 0.0;  // Monte Carlo standard error of empirical_std
  std::size_t trials = 0;
};

/// Draws `trials` bins of `c_t` gold labels (uniform over classes), corrupts them
/// with generate_label_noise at rate alpha and measures the bin-mean error.
NoiseSimulation simulate_bin_mean_noise(std::size_t c_t, double alpha, std::size_t trials, std::uint64_t seed);

struct RandomWalkSpec {
  std::string event_id = "walk-0";
  Category category = Category::natural_disaster;
  Granularity granularity = Granularity::day;
  std::size_t n_bins = 120;
  double start_level = 200.0;
  double step_sd = 10.0;
  /// Probability that a bin carries a one-bin spike, and the spike size in step_sd units.
  double spike_prob = 0.1;
  double spike_scale = 8.0;
  std::int64_t start_utc = 1640995200;
  std::uint64_t seed = 0;
};

/// A fully observed, split, imputed and normalized series whose count and
/// sentiment follow random walks with transient spikes.
EventSeries random_walk_series(const RandomWalkSpec& spec);

}  // namespace eventcast
