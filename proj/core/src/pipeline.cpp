#include "eventcast/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>

#include <spdlog/spdlog.h>

#include "eventcast/interaction_graph.hpp"
#include "eventcast/io.hpp"
#include "eventcast/text_views.hpp"

namespace eventcast {

namespace {

using nlohmann::json;

template <class T, class Parse>
std::vector<T> parse_list(const json& j, Parse parse) {
  std::vector<T> out;
  for (const auto& v : j) out.push_back(parse(v.get<std::string>()));
  return out;
}

std::vector<EventRecord> labeled_corpus(const PipelineConfig& config, std::size_t* dropped) {
  auto events = read_corpus(config.corpus_dir());
  const auto labels = config.labels_path();
  if (!std::filesystem::exists(labels)) throw MissingArtifact(labels);
  const auto cache = LabelCache::load(labels);
  const std::size_t n = apply_labels(events, cache);
  if (dropped) *dropped = n;
  return events;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, PipelineConfig c) {
  try {
    if (j.contains("work_dir")) c.work_dir = j.at("work_dir").get<std::string>();
    if (j.contains("raw_dir")) c.raw_dir = j.at("raw_dir").get<std::string>();
    if (j.contains("corpus_dir")) c.corpus = j.at("corpus_dir").get<std::string>();
    if (j.contains("salt")) c.salt = j.at("salt").get<std::string>();
    if (j.contains("granularities"))
      c.granularities = parse_list<Granularity>(j.at("granularities"), parse_granularity);
    if (j.contains("models")) c.models = parse_list<ModelKind>(j.at("models"), parse_model_kind);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("k")) c.k_percents = j.at("k").get<std::vector<double>>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<std::size_t>();
    if (j.contains("min_bins")) c.min_bins = j.at("min_bins").get<std::size_t>();
    if (j.contains("generated_at")) c.generated_at = j.at("generated_at").get<std::string>();
    if (j.contains("event_thresholds")) {
      const auto& t = j.at("event_thresholds");
      c.event_thresholds.min_posts = t.value("min_posts", c.event_thresholds.min_posts);
      c.event_thresholds.min_span_days = t.value("min_span_days", c.event_thresholds.min_span_days);
      c.event_thresholds.min_density = t.value("min_density", c.event_thresholds.min_density);
    }
    if (j.contains("filter_thresholds")) {
      const auto& t = j.at("filter_thresholds");
      auto& f = c.filter_thresholds;
      f.min_stripped_chars = t.value("min_stripped_chars", f.min_stripped_chars);
      f.min_letters = t.value("min_letters", f.min_letters);
      f.max_url_share = t.value("max_url_share", f.max_url_share);
      f.min_chars_for_language = t.value("min_chars_for_language", f.min_chars_for_language);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
      c.train.patience = t.value("patience", c.train.patience);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
    }
    if (j.contains("annotator")) {
      const auto& a = j.at("annotator");
      c.annotator.endpoint = a.value("endpoint", c.annotator.endpoint);
      c.annotator.model_name = a.value("model_name", c.annotator.model_name);
      c.annotator.prompt_template = a.value("prompt_template", c.annotator.prompt_template);
      c.annotator.max_retries = a.value("max_retries", c.annotator.max_retries);
      c.annotator.timeout_seconds = a.value("timeout_seconds", c.annotator.timeout_seconds);
      c.annotator.max_in_flight = a.value("max_in_flight", c.annotator.max_in_flight);
      if (a.contains("decoding")) c.annotator.decoding = a.at("decoding");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

json PipelineConfig::to_json() const {
  json grans = json::array();
  for (auto g : granularities) grans.push_back(to_string(g));
  json model_names = json::array();
  for (auto m : models) model_names.push_back(to_string(m));
  return {{"work_dir", work_dir.string()},
          {"raw_dir", raw_dir.string()},
          {"corpus_dir", corpus.string()},
          {"granularities", grans},
          {"models", model_names},
          {"seeds", seeds},
          {"k", k_percents},
          {"min_bins", min_bins},
          {"event_thresholds",
           {{"min_posts", event_thresholds.min_posts},
            {"min_span_days", event_thresholds.min_span_days},
            {"min_density", event_thresholds.min_density}}},
          {"train",
           {{"learning_rate", train.learning_rate},
            {"max_epochs", train.max_epochs},
            {"patience", train.patience},
            {"batch_size", train.batch_size}}}};
}

std::filesystem::path PipelineConfig::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : work_dir / p;
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  return format_iso8601(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

IngestReport run_ingest(const PipelineConfig& config) {
  IngestOptions options;
  options.salt = config.salt;
  options.event_thresholds = config.event_thresholds;
  options.filter_thresholds = config.filter_thresholds;
  options.jobs = config.jobs;
  options.generated_at = config.generated_at.empty() ? now_iso8601() : config.generated_at;
  StopwordLanguageDetector detector;
  auto result = ingest_directory(config.raw_path(), options, detector);
  if (result.events.empty()) spdlog::warn("ingest produced no events");
  write_ingest_output(result, config.corpus_dir());
  return result.report;
}

std::size_t import_labels(const PipelineConfig& config, const std::filesystem::path& label_file) {
  if (!std::filesystem::exists(label_file)) throw MissingArtifact(label_file);
  auto cache = LabelCache::load(config.labels_path());
  const auto incoming = LabelCache::load(label_file);
  for (const auto& [id, rec] : incoming.records()) cache.put(rec);
  cache.save(config.labels_path());
  return incoming.size();
}

AnnotationSummary run_annotate(const PipelineConfig& config, CompletionService& service) {
  config.annotator.validate();
  const auto events = read_corpus(config.corpus_dir());
  auto cache = LabelCache::load(config.labels_path());
  const auto summary = annotate_corpus(events, config.annotator, service, cache);
  cache.save(config.labels_path());
  return summary;
}

BuildSummary run_build(const PipelineConfig& config) {
  BuildSummary summary;
  const auto corpus = read_corpus(config.corpus_dir());
  auto labeled = labeled_corpus(config, &summary.unlabeled_dropped);
  summary.events = corpus.size();

  // Edges come from the full retained corpus, before unlabeled posts are dropped.
  std::vector<std::unordered_set<std::string>> replied(corpus.size());
  parallel_for(corpus.size(), config.jobs, [&](std::size_t i) {
    const auto edges = build_edges(corpus[i]);
    write_edges(edges, config.edges_dir() / (corpus[i].event_id + ".csv"));
    replied[i] = replied_targets(edges);
  });

  struct Item {
    std::size_t event;
    Granularity g;
    BuildOutcome outcome;
  };
  std::vector<Item> items;
  for (std::size_t e = 0; e < labeled.size(); ++e)
    for (Granularity g : config.granularities) items.push_back({e, g, {}});

  for (Granularity g : config.granularities)
    std::filesystem::remove_all(config.series_dir() / std::string(to_string(g)));

  BuildOptions options;
  options.min_bins = config.min_bins;
  parallel_for(items.size(), config.jobs, [&](std::size_t i) {
    auto& item = items[i];
    item.outcome = build_series(labeled[item.event], item.g, replied[item.event], options);
    if (item.outcome.series) write_series(*item.outcome.series, config.series_dir() / std::string(to_string(item.g)));
  });

  json events = json::array();
  for (std::size_t e = 0; e < labeled.size(); ++e) {
    json entry{{"event_id", labeled[e].event_id}, {"labeled_posts", labeled[e].posts.size()}};
    for (const auto& item : items) {
      if (item.event != e) continue;
      const std::string g(to_string(item.g));
      if (item.outcome.series) {
        ++summary.series_written[item.g];
        entry[g] = {{"bins", item.outcome.series->size()},
                    {"active_posts", item.outcome.active_posts},
                    {"flags", item.outcome.series->flags}};
      } else {
        entry[g] = {{"dropped", item.outcome.dropped_reason}};
      }
    }
    events.push_back(std::move(entry));
  }
  summary.report = {{"generated_at", config.generated_at.empty() ? now_iso8601() : config.generated_at},
                    {"unlabeled_dropped", summary.unlabeled_dropped},
                    {"events", std::move(events)}};
  write_file(config.series_dir() / "build_report.json", summary.report.dump(2) + "\n");
  return summary;
}

std::size_t run_views(const PipelineConfig& config) {
  const auto events = labeled_corpus(config, nullptr);
  std::map<std::string, const EventRecord*> by_id;
  for (const auto& e : events) by_id[e.event_id] = &e;

  std::size_t written = 0;
  for (Granularity g : config.granularities) {
    const auto series = read_series_dir(config.series_dir(), g);
    const auto out_dir = config.views_dir() / std::string(to_string(g));
    std::filesystem::remove_all(out_dir);
    std::filesystem::create_directories(out_dir);
    parallel_for(series.size(), config.jobs, [&](std::size_t i) {
      const auto it = by_id.find(series[i].event_id);
      if (it == by_id.end())
        throw MissingArtifact(config.corpus_dir() / "events" / (series[i].event_id + ".jsonl"));
      const auto views = build_views(*it->second, series[i]);
      write_views(views, out_dir / (series[i].event_id + ".jsonl"));
    });
    written += series.size();
  }
  return written;
}

std::size_t run_windows(const PipelineConfig& config) {
  std::size_t total = 0;
  for (Granularity g : config.granularities) {
    const auto series = read_series_dir(config.series_dir(), g);
    const auto shape = window_shape(g);
    std::string out;
    for (const auto& s : series)
      for (Target t : kAllTargets)
        for (const auto& w : make_windows(s, t, shape.lookback, shape.horizon)) {
          json line{{"event_id", w.event_id},
                    {"category", to_string(w.category)},
                    {"granularity", to_string(g)},
                    {"target", to_string(t)},
                    {"split", to_string(w.split)},
                    {"start", w.start},
                    {"lookback_start_utc", format_iso8601(s.bins[w.start].bin_start_utc)},
                    {"horizon_bin_indices", w.horizon_bin_indices},
                    {"lookback", w.lookback},
                    {"horizon", w.horizon}};
          out += line.dump() + "\n";
          ++total;
        }
    write_file(config.windows_dir() / (std::string(to_string(g)) + ".jsonl"), out);
  }
  return total;
}

std::vector<ReportRow> run_eval(const PipelineConfig& config, const EvalRun& run) {
  EvalData data;
  EvalOptions options;
  options.protocol = run.protocol;
  options.models = config.models;
  options.seeds = config.seeds;
  options.k_percents = config.k_percents;
  options.granularities = config.granularities;
  options.train = config.train;
  options.jobs = config.jobs;
  options.audit_windows = run.audit_windows;

  std::vector<Granularity> needed = config.granularities;
  if (run.protocol == Protocol::structure_aware) needed = {Granularity::day};
  for (Granularity g : needed) {
    data.series[g] = read_series_dir(config.series_dir(), g);
    data.views_available[g] = std::filesystem::is_directory(config.views_dir() / std::string(to_string(g)));
  }
  for (const auto& m : run.merge)
    if (!std::filesystem::exists(m)) throw MissingArtifact(m);

  auto result = run_protocol(data, options);
  for (const auto& m : run.merge) result.rows = merge_reports(std::move(result.rows), read_report_csv(m));

  const auto out = run.out ? config.resolve(*run.out)
                           : config.reports_dir() / (std::string(to_string(run.protocol)) + ".csv");
  write_file(out, report_to_csv(result.rows));
  auto audit_path = out;
  audit_path.replace_extension(".audit.json");
  result.audit["generated_at"] = config.generated_at.empty() ? now_iso8601() : config.generated_at;
  write_file(audit_path, result.audit.dump(2) + "\n");
  return result.rows;
}

std::vector<SynthSpec> read_synth_specs(const json& j) {
  std::vector<SynthSpec> specs;
  if (j.contains("events")) {
    for (const auto& e : j.at("events")) specs.push_back(synth_spec_from_json(e));
  } else if (j.contains("count")) {
    const auto base = synth_spec_from_json(j.value("template", json::object()));
    const auto n = j.at("count").get<std::size_t>();
    const std::string prefix = j.value("prefix", std::string("synth"));
    for (std::size_t i = 0; i < n; ++i) {
      SynthSpec s = base;
      s.event_id = prefix + "-" + std::to_string(i);
      s.category = kAllCategories[i % std::size(kAllCategories)];
      s.regime = i % 2 == 0 ? Regime::burst : Regime::sustained;
      s.seed = base.seed + i;
      specs.push_back(std::move(s));
    }
  } else {
    specs.push_back(synth_spec_from_json(j));
  }
  for (const auto& s : specs) s.validate();
  return specs;
}

std::size_t run_synth(const PipelineConfig& config, const std::vector<SynthSpec>& specs) {
  const Anonymizer anonymizer(config.salt);
  std::vector<std::vector<LabelRecord>> gold(specs.size());
  std::vector<std::size_t> counts(specs.size());
  parallel_for(specs.size(), config.jobs, [&](std::size_t i) {
    const auto event = generate_event(specs[i]);
    std::string out;
    for (const auto& r : raw_records(event)) out += r.dump() + "\n";
    write_file(config.raw_path() / (specs[i].event_id + ".jsonl"), out);
    gold[i] = gold_labels(event, anonymizer);
    counts[i] = event.posts.size();
  });
  auto cache = LabelCache::load(config.labels_path());
  std::size_t total = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (auto& rec : gold[i]) cache.put(std::move(rec));
    total += counts[i];
  }
  cache.save(config.labels_path());
  return total;
}

VerificationReport run_verify(const PipelineConfig& config, const std::filesystem::path& csv) {
  const auto records = read_verification_csv(csv);
  const auto report = verification_report(records);
  write_file(config.reports_dir() / "verification.json", report.to_json().dump(2) + "\n");
  return report;
}

}  // namespace eventcast
