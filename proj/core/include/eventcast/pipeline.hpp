#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eventcast/annotation.hpp"
#include "eventcast/baselines.hpp"
#include "eventcast/evaluation.hpp"
#include "eventcast/ingestion.hpp"
#include "eventcast/series.hpp"
#include "eventcast/synth.hpp"

namespace eventcast {

/// Settings shared by every stage. Relative paths resolve against work_dir.
struct PipelineConfig {
  std::filesystem::path work_dir = ".";
  std::filesystem::path raw_dir = "raw";
  std::filesystem::path corpus = "corpus";
  std::string salt = "eventcast";
  AnnotatorConfig annotator;
  std::vector<Granularity> granularities{std::begin(kAllGranularities), std::end(kAllGranularities)};
  EventThresholds event_thresholds;
  FilterThresholds filter_thresholds;
  std::size_t min_bins = kMinBins;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<ModelKind> models{std::begin(kAllModels), std::end(kAllModels)};
  std::vector<double> k_percents{5, 10, 20, 50};
  TrainConfig train;
  std::size_t jobs = 1;
  /// Pins "generated_at" fields so reruns are byte-identical; empty means now.
  std::string generated_at;

  /// Overlays the keys present in `j` onto `base`.
  static PipelineConfig from_json(const nlohmann::json& j, PipelineConfig base);
  [[nodiscard]] nlohmann::json to_json() const;

  [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const;
  [[nodiscard]] std::filesystem::path raw_path() const { return resolve(raw_dir); }
  [[nodiscard]] std::filesystem::path corpus_dir() const { return resolve(corpus); }
  [[nodiscard]] std::filesystem::path labels_path() const { return resolve("labels/labels.jsonl"); }
  [[nodiscard]] std::filesystem::path series_dir() const { return resolve("series"); }
  [[nodiscard]] std::filesystem::path edges_dir() const { return resolve("edges"); }
  [[nodiscard]] std::filesystem::path views_dir() const { return resolve("views"); }
  [[nodiscard]] std::filesystem::path windows_dir() const { return resolve("windows"); }
  [[nodiscard]] std::filesystem::path reports_dir() const { return resolve("reports"); }
};

std::string now_iso8601();

IngestReport run_ingest(const PipelineConfig& config);

/// Copies labels from a label-cache JSONL file into the work-dir cache.
std::size_t import_labels(const PipelineConfig& config, const std::filesystem::path& label_file);
AnnotationSummary run_annotate(const PipelineConfig& config, CompletionService& service);

struct BuildSummary {
  std::size_t events = 0;
  std::size_t unlabeled_dropped = 0;
  std::map<Granularity, std::size_t> series_written;
  nlohmann::json report;
};

/// Edges for every event plus one series per (event, granularity).
BuildSummary run_build(const PipelineConfig& config);

/// Views JSONL for every series on disk. Returns the number of files written.
std::size_t run_views(const PipelineConfig& config);

/// Window definitions: windows/<g>.jsonl, one line per window and target.
std::size_t run_windows(const PipelineConfig& config);

struct EvalRun {
  Protocol protocol = Protocol::within_event;
  std::vector<std::filesystem::path> merge;
  std::optional<std::filesystem::path> out;  // default reports/<protocol>.csv
  bool audit_windows = false;
};

std::vector<ReportRow> run_eval(const PipelineConfig& config, const EvalRun& run);

/// Spec file: a single spec object, {"events": [spec, ...]}, or
/// {"count": N, "template": spec} which cycles categories and alternates regimes.
std::vector<SynthSpec> read_synth_specs(const nlohmann::json& j);

/// Writes raw/<event_id>.jsonl and merges gold labels into the label cache.
std::size_t run_synth(const PipelineConfig& config, const std::vector<SynthSpec>& specs);

/// Reads the verification CSV and writes reports/verification.json.
VerificationReport run_verify(const PipelineConfig& config, const std::filesystem::path& csv);

}  // namespace eventcast
