#include <doctest.h>

#include <cmath>

#include "eventcast/pipeline.hpp"
#include "eventcast/io.hpp"
#include "fixtures.hpp"

using namespace eventcast;

TEST_CASE("generate_event") {
  SynthSpec spec;
  spec.n_days = 10;
  spec.base_rate = 30;
  spec.seed = 4;
  const auto a = generate_event(spec);
  const auto b = generate_event(spec);
  REQUIRE(a.posts.size() > 50);
  CHECK(a.posts.size() == b.posts.size());
  for (std::size_t i = 0; i < a.posts.size(); ++i) CHECK(a.posts[i] == b.posts[i]);
  for (std::size_t i = 1; i < a.posts.size(); ++i) CHECK(a.posts[i - 1].timestamp_utc <= a.posts[i].timestamp_utc);
  for (const auto& p : a.posts) {
    CHECK(p.timestamp_utc >= spec.start_utc);
    CHECK(p.timestamp_utc < spec.start_utc + 10 * 86400);
    CHECK(p.sentiment.has_value());
  }

  spec.reply_prob = 0.0;
  for (const auto& p : generate_event(spec).posts) CHECK_FALSE(p.parent_id.has_value());
  spec.reply_prob = 1.0;
  const auto all = generate_event(spec);
  for (std::size_t i = 1; i < all.posts.size(); ++i) CHECK(all.posts[i].parent_id.has_value());

  spec.n_days = 0;
  CHECK_THROWS_AS(generate_event(spec), std::invalid_argument);
  spec.n_days = 3;
  spec.reply_prob = 1.5;
  CHECK_THROWS_AS(generate_event(spec), std::invalid_argument);
}

TEST_CASE("simulate_bin_mean_noise tracks the bound") {
  const auto sim = simulate_bin_mean_noise(100, 0.2, 4000, 17);
  CHECK(sim.trials == 4000);
  CHECK(sim.empirical_std <= aggregation_noise_bound(100, 0.2, 1) + 3 * sim.standard_error);
  CHECK(simulate_bin_mean_noise(50, 0.0, 10, 1).empirical_std == 0.0);
  CHECK_THROWS_AS(simulate_bin_mean_noise(0, 0.2, 10, 1), std::invalid_argument);
}

TEST_CASE("random_walk_series is ready for windowing") {
  RandomWalkSpec spec;
  spec.n_bins = 50;
  const auto s = random_walk_series(spec);
  CHECK(s.size() == 50);
  for (const auto& b : s.bins) {
    CHECK(b.count_z.has_value());
    CHECK(b.sentiment_z.has_value());
  }
  spec.n_bins = 20;
  CHECK_THROWS_AS(random_walk_series(spec), std::invalid_argument);
}

TEST_CASE("read_synth_specs forms") {
  const auto one = read_synth_specs(nlohmann::json{{"event_id", "solo"}, {"n_days", 5}});
  REQUIRE(one.size() == 1);
  CHECK(one[0].event_id == "solo");
  CHECK(one[0].n_days == 5);

  const auto listed = read_synth_specs(nlohmann::json::parse(
      R"({"events":[{"event_id":"a","regime":"sustained"},{"event_id":"b","start_utc":"2022-02-04T00:00:00Z"}]})"));
  REQUIRE(listed.size() == 2);
  CHECK(listed[0].regime == Regime::sustained);
  CHECK(listed[1].start_utc == fixtures::kFeb4);

  const auto cycled = read_synth_specs(nlohmann::json::parse(R"({"count":6,"template":{"seed":10}})"));
  REQUIRE(cycled.size() == 6);
  CHECK(cycled[5].category == cycled[0].category);
  CHECK(cycled[1].category != cycled[0].category);
  CHECK(cycled[1].regime == Regime::sustained);
  CHECK(cycled[3].seed == 13);
  CHECK(cycled[2].event_id == "synth-2");

  CHECK_THROWS_AS(read_synth_specs(nlohmann::json{{"reply_prob", 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(read_synth_specs(nlohmann::json{{"regime", "wavy"}}), ParseError);
  const auto round = synth_spec_from_json(to_json(listed[1]));
  CHECK(round.start_utc == listed[1].start_utc);
  CHECK(round.event_id == "b");
}

TEST_CASE("pipeline round trip") {
  fixtures::TempDir dir("pipeline");
  PipelineConfig config;
  config.work_dir = dir.path();
  config.granularities = {Granularity::day, Granularity::half_day};
  config.generated_at = "2022-02-04T00:00:00Z";
  config.seeds = {0, 1};
  config.train.max_epochs = 2;

  std::vector<SynthSpec> specs;
  for (int i = 0; i < 3; ++i) {
    SynthSpec s;
    s.event_id = "ev" + std::to_string(i);
    s.category = kAllCategories[i];
    s.regime = i % 2 == 0 ? Regime::burst : Regime::sustained;
    s.n_days = 30;
    s.base_rate = 15;
    s.seed = 70 + i;
    specs.push_back(s);
  }
  const auto posts = run_synth(config, specs);
  CHECK(posts > 0);
  CHECK(std::filesystem::exists(config.raw_path() / "ev0.jsonl"));

  const auto ingest = run_ingest(config);
  REQUIRE(ingest.events.size() == 3);
  for (const auto& e : ingest.events) CHECK(e.kept);

  CHECK_THROWS_AS(run_eval(config, {}), std::exception);
  const auto build = run_build(config);
  CHECK(build.unlabeled_dropped == 0);
  REQUIRE(build.series_written.at(Granularity::day) == 3);

  // Every active post lands in exactly one bin.
  for (const auto& entry : build.report.at("events")) {
    const auto s = read_series(config.series_dir() / "1d" / (entry.at("event_id").get<std::string>() + ".csv"));
    std::int64_t sum = 0;
    for (const auto& b : s.bins) sum += b.count.value_or(0);
    CHECK(sum == entry.at("1d").at("active_posts").get<std::int64_t>());
  }
  CHECK(std::filesystem::exists(config.edges_dir() / "ev0.csv"));

  CHECK(run_views(config) == 6);
  CHECK(run_windows(config) > 0);
  CHECK(read_lines(config.windows_dir() / "1d.jsonl").size() > 0);

  EvalRun run;
  run.protocol = Protocol::within_event;
  const auto rows = run_eval(config, run);
  CHECK(rows.size() == 3 * 2 * 2 * 2);
  CHECK(std::filesystem::exists(config.reports_dir() / "within_event.csv"));
  CHECK(std::filesystem::exists(config.reports_dir() / "within_event.audit.json"));
  CHECK(read_report_csv(config.reports_dir() / "within_event.csv").size() == rows.size());
}
