#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "eventcast/baselines.hpp"
#include "eventcast/interaction_graph.hpp"
#include "eventcast/series.hpp"

namespace eventcast {

/// Throws std::invalid_argument on length mismatch or empty input.
double mae(std::span<const double> pred, std::span<const double> truth);
double mse(std::span<const double> pred, std::span<const double> truth);

/// Mean absolute error per bin, averaged over every window whose horizon covers it.
class BinErrorMap {
 public:
  void add(const BinRef& bin, double abs_error);
  void add_window(const ForecastWindow& window, std::span<const double> pred);
  [[nodiscard]] std::map<BinRef, double> means() const;
  [[nodiscard]] bool empty() const { return sums_.empty(); }

 private:
  std::map<BinRef, std::pair<double, std::size_t>> sums_;
};

/// Mean of the per-bin errors over `subset`; nullopt for an empty subset.
/// Throws std::invalid_argument when a subset bin has no error.
std::optional<double> mae_reply(const std::map<BinRef, double>& per_bin, std::span<const BinRef> subset);

/// Plain mean over every bin of the map.
double per_bin_mae(const std::map<BinRef, double>& per_bin);

enum class Protocol { within_event, text_augmented, structure_aware, loco };
enum class TextConfig { none, flat, structured, not_applicable };
enum class Metric { mae, mse, mae_reply };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view s);
std::string_view to_string(TextConfig t);  // "none", "flat", "structured", "n/a"
TextConfig parse_text_config(std::string_view s);
std::string_view to_string(Metric m);  // "MAE", "MSE", "MAE_reply"
Metric parse_metric(std::string_view s);

struct ReportRow {
  std::string model;
  std::string target;
  std::string granularity;
  std::string protocol;
  std::string held_out;  // held-out category under loco, empty otherwise
  std::string text_config;
  std::string metric;
  std::optional<double> k;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n_seeds = 0;
};

struct SeedStats {
  double mean = 0.0;
  double std = 0.0;
};

/// Population statistics; identical inputs give std == 0 exactly.
SeedStats seed_stats(std::span<const double> values);

inline constexpr std::string_view kReportHeader =
    "model,target,granularity,protocol,held_out,text_config,metric,k,mean,std,n_seeds";

std::string report_to_csv(std::span<const ReportRow> rows);
/// Accepts the report header in any column order; held_out may be absent.
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);
/// Appends `extra` to `base`. Throws std::invalid_argument on a duplicated row key.
std::vector<ReportRow> merge_reports(std::vector<ReportRow> base, std::span<const ReportRow> extra);

struct EvalData {
  std::map<Granularity, std::vector<EventSeries>> series;
  /// Granularities whose text views are on disk.
  std::map<Granularity, bool> views_available;
};

struct EvalOptions {
  Protocol protocol = Protocol::within_event;
  std::vector<ModelKind> models{std::begin(kAllModels), std::end(kAllModels)};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<double> k_percents{5, 10, 20, 50};
  std::vector<Granularity> granularities{std::begin(kAllGranularities), std::end(kAllGranularities)};
  std::vector<Target> targets{std::begin(kAllTargets), std::end(kAllTargets)};
  TrainConfig train;
  std::size_t jobs = 1;
  bool audit_windows = false;
};

struct EvalResult {
  std::vector<ReportRow> rows;
  nlohmann::json audit;
};

/// Throws MissingArtifact (views absent under text_augmented) or std::invalid_argument
/// (fewer than two categories under loco) before any training starts.
EvalResult run_protocol(const EvalData& data, const EvalOptions& options);

}  // namespace eventcast
