#include "eventcast/cli.hpp"

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "eventcast/io.hpp"
#include "eventcast/pipeline.hpp"

namespace eventcast {

namespace {

std::vector<Granularity> granularity_arg(const std::string& value) {
  if (value == "all") return {std::begin(kAllGranularities), std::end(kAllGranularities)};
  return {parse_granularity(value)};
}

struct Overrides {
  std::optional<std::string> work_dir;
  std::optional<std::string> config;
  std::optional<std::size_t> jobs;
  std::optional<std::string> salt;
  std::optional<std::string> generated_at;
  std::string log_level = "warn";
};

PipelineConfig load_config(const Overrides& o) {
  PipelineConfig config;
  config.jobs = default_jobs();
  if (o.config) config = PipelineConfig::from_json(nlohmann::json::parse(read_file(*o.config)), config);
  if (o.work_dir) config.work_dir = *o.work_dir;
  if (o.jobs) config.jobs = *o.jobs;
  if (o.salt) config.salt = *o.salt;
  if (o.generated_at) config.generated_at = *o.generated_at;
  if (config.jobs == 0) config.jobs = default_jobs();
  return config;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Event-centric social media forecasting pipeline"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--work-dir,-w", o.work_dir, "Directory holding all stage artifacts");
  app.add_option("--config,-c", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--jobs,-j", o.jobs, "Worker threads (default: logical processors)");
  app.add_option("--salt", o.salt, "Anonymization salt");
  app.add_option("--generated-at", o.generated_at, "Pin report timestamps (ISO-8601)");
  app.add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic raw corpus with gold labels");
  std::string spec_file;
  synth->add_option("--spec", spec_file, "Synthetic corpus spec (JSON)")->required();

  auto* ingest = app.add_subcommand("ingest", "Unify, anonymize and filter raw JSONL");
  std::optional<std::string> raw_dir;
  std::optional<std::string> corpus_out;
  ingest->add_option("--raw", raw_dir, "Raw input directory");
  ingest->add_option("--out", corpus_out, "Corpus output directory");

  auto* annotate = app.add_subcommand("annotate", "Attach sentiment labels");
  std::optional<std::string> label_file;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_name;
  annotate->add_option("--labels", label_file, "Import labels from a label-cache JSONL file");
  annotate->add_option("--endpoint", endpoint, "Completion endpoint URL");
  annotate->add_option("--model", model_name, "Annotator model name");

  std::optional<std::string> granularity;
  auto* build = app.add_subcommand("build", "Build edges and per-granularity series");
  build->add_option("--granularity,-g", granularity, "1d|12h|6h|all (default: from config, else all)");
  auto* views = app.add_subcommand("views", "Render flat and structured text views");
  views->add_option("--granularity,-g", granularity, "1d|12h|6h|all (default: from config, else all)");
  auto* windows = app.add_subcommand("windows", "Export forecasting window definitions");
  windows->add_option("--granularity,-g", granularity, "1d|12h|6h|all (default: from config, else all)");

  auto* eval = app.add_subcommand("eval", "Run an evaluation protocol");
  std::string protocol;
  std::vector<std::string> models;
  std::vector<double> ks;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> merge;
  std::optional<std::string> report_out;
  bool audit_windows = false;
  eval->add_option("--protocol,-p", protocol, "within_event|text_augmented|structure_aware|loco")->required();
  eval->add_option("--models,-m", models, "LastValue MovingAverage DLinear")->delimiter(',');
  eval->add_option("--k", ks, "Top-k reply-ratio percentages")->delimiter(',');
  eval->add_option("--seeds", seeds, "Seed list")->delimiter(',');
  eval->add_option("--granularity,-g", granularity, "1d|12h|6h|all (default: from config, else all)");
  eval->add_option("--merge", merge, "Extra report CSVs to merge into the output");
  eval->add_option("--out,-o", report_out, "Report CSV path");
  eval->add_flag("--audit-windows", audit_windows, "Store per-window errors in the audit JSON");

  auto* verify = app.add_subcommand("verify", "Agreement statistics for a verification sample");
  std::string verify_csv;
  verify->add_option("--input", verify_csv, "CSV: post_id,llm,human_a,human_b,consensus,category")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(o.log_level));
    PipelineConfig config = load_config(o);

    if (synth->parsed()) {
      const auto specs = read_synth_specs(nlohmann::json::parse(read_file(spec_file)));
      const auto posts = run_synth(config, specs);
      std::cout << "synth: " << specs.size() << " events, " << posts << " posts\n";
    } else if (ingest->parsed()) {
      if (raw_dir) config.raw_dir = *raw_dir;
      if (corpus_out) config.corpus = *corpus_out;
      const auto report = run_ingest(config);
      std::size_t kept = 0;
      for (const auto& e : report.events) kept += e.kept ? 1 : 0;
      std::cout << "ingest: " << kept << " of " << report.events.size() << " events kept\n";
    } else if (annotate->parsed()) {
      if (label_file) {
        std::cout << "annotate: imported " << import_labels(config, *label_file) << " labels\n";
      } else {
        if (endpoint) config.annotator.endpoint = *endpoint;
        if (model_name) config.annotator.model_name = *model_name;
        if (config.annotator.endpoint.empty()) {
          std::cerr << "annotate: need --labels or an endpoint\n";
          return 1;
        }
        HttpCompletionService service(config.annotator);
        const auto s = run_annotate(config, service);
        std::cout << "annotate: " << s.annotated << " annotated, " << s.cached << " cached, " << s.failed
                  << " failed\n";
      }
    } else if (build->parsed()) {
      if (granularity) config.granularities = granularity_arg(*granularity);
      const auto s = run_build(config);
      std::cout << "build: " << s.events << " events";
      for (const auto& [g, n] : s.series_written) std::cout << ", " << to_string(g) << "=" << n;
      std::cout << "\n";
    } else if (views->parsed()) {
      if (granularity) config.granularities = granularity_arg(*granularity);
      std::cout << "views: " << run_views(config) << " files\n";
    } else if (windows->parsed()) {
      if (granularity) config.granularities = granularity_arg(*granularity);
      std::cout << "windows: " << run_windows(config) << " windows\n";
    } else if (eval->parsed()) {
      if (granularity) config.granularities = granularity_arg(*granularity);
      if (!models.empty()) {
        config.models.clear();
        for (const auto& m : models) config.models.push_back(parse_model_kind(m));
      }
      if (!ks.empty()) config.k_percents = ks;
      if (!seeds.empty()) config.seeds = seeds;
      EvalRun run;
      run.protocol = parse_protocol(protocol);
      for (const auto& m : merge) run.merge.emplace_back(m);
      if (report_out) run.out = *report_out;
      run.audit_windows = audit_windows;
      const auto rows = run_eval(config, run);
      std::cout << "eval: " << rows.size() << " rows\n";
    } else if (verify->parsed()) {
      const auto r = run_verify(config, verify_csv);
      std::cout << "verify: kappa=" << format_double(r.kappa) << " agreement=" << format_double(r.overall_agreement)
                << "\n";
    }
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const SchemaFailure& e) {
    std::cerr << "error: schema failure: " << e.what() << "\n";
    return 3;
  } catch (const UnreadableInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace eventcast
