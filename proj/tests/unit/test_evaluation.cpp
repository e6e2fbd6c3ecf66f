#include <doctest.h>

#include <random>
#include <set>

#include "eventcast/evaluation.hpp"
#include "eventcast/ingestion.hpp"
#include "eventcast/synth.hpp"
#include "fixtures.hpp"

using namespace eventcast;

namespace {

EvalData walk_data(std::size_t n_events, std::size_t n_bins) {
  EvalData data;
  std::mt19937_64 rng(8);
  for (std::size_t e = 0; e < n_events; ++e) {
    RandomWalkSpec spec;
    spec.event_id = "walk-" + std::to_string(e);
    spec.category = kAllCategories[e % std::size(kAllCategories)];
    spec.n_bins = n_bins;
    spec.seed = 500 + e;
    auto s = random_walk_series(spec);
    for (auto& b : s.bins) b.reply_ratio = static_cast<double>(rng() % 21) / 20.0;
    data.series[Granularity::day].push_back(std::move(s));
  }
  return data;
}

EvalOptions quick(Protocol p) {
  EvalOptions o;
  o.protocol = p;
  o.granularities = {Granularity::day};
  o.seeds = {0, 1, 2};
  o.train.max_epochs = 3;
  return o;
}

}  // namespace

TEST_CASE("mae and mse") {
  CHECK(mae(std::vector<double>{0, 0}, std::vector<double>{1, -1}) == 1.0);
  CHECK(mse(std::vector<double>{0, 0}, std::vector<double>{1, -1}) == 1.0);
  CHECK(mae(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}) == doctest::Approx(2.0 / 3.0));
  CHECK(mse(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}) == doctest::Approx(2.0 / 3.0));
  CHECK(mse(std::vector<double>{0, 0}, std::vector<double>{0, 4}) == 8.0);
  CHECK_THROWS_AS(mae(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(mse(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("mse dominates squared mae") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(1 + rng() % 30), t(p.size());
    for (auto& v : p) v = z(rng);
    for (auto& v : t) v = z(rng);
    const double a = mae(p, t);
    CHECK(mse(p, t) >= a * a * (1.0 - 1e-12));
  }
}

TEST_CASE("per-bin errors and mae_reply") {
  BinErrorMap errors;
  ForecastWindow w;
  w.event_id = "e";
  w.horizon = {1.0, 2.0};
  w.horizon_bin_indices = {5, 6};
  errors.add_window(w, std::vector<double>{0.0, 2.0});
  w.horizon = {0.0};
  w.horizon_bin_indices = {6};
  errors.add_window(w, std::vector<double>{1.0});
  const auto per_bin = errors.means();
  CHECK(per_bin.at({"e", 5}) == 1.0);
  CHECK(per_bin.at({"e", 6}) == 0.5);
  CHECK_THROWS_AS(errors.add_window(w, std::vector<double>{1.0, 2.0}), std::invalid_argument);

  const std::map<BinRef, double> three = {{{"a", 0}, 1.0}, {{"a", 1}, 0.2}, {{"b", 0}, 0.6}};
  const std::vector<BinRef> two = {{"a", 0}, {"a", 1}};
  CHECK(*mae_reply(three, two) == doctest::Approx(0.6));
  CHECK_FALSE(mae_reply(three, std::vector<BinRef>{}).has_value());
  CHECK_THROWS_AS(mae_reply(three, std::vector<BinRef>{{"zz", 0}}), std::invalid_argument);

  std::vector<ScoredBin> scored;
  for (const auto& [ref, _] : three) scored.push_back({ref, 0.5});
  const auto everything = high_interaction_subset(scored, 100);
  CHECK(*mae_reply(three, everything) == per_bin_mae(three));
}

TEST_CASE("seed_stats") {
  const std::vector<double> same(5, 0.123456789);
  const auto s = seed_stats(same);
  CHECK(s.std == 0.0);
  CHECK(s.mean == 0.123456789);
  const auto t = seed_stats(std::vector<double>{1, 2, 3, 4});
  CHECK(t.mean == 2.5);
  CHECK(t.std == doctest::Approx(std::sqrt(1.25)));
}

TEST_CASE("report CSV") {
  ReportRow a{"DLinear", "count", "1d", "within_event", "", "n/a", "MAE", std::nullopt, 0.5, 0.25, 5};
  ReportRow b{"DLinear", "sentiment", "1d", "structure_aware", "", "n/a", "MAE_reply", 10.0, 1.0, 0.0, 5};
  const std::vector<ReportRow> rows{a, b};
  const auto text = report_to_csv(rows);
  CHECK(text ==
        "model,target,granularity,protocol,held_out,text_config,metric,k,mean,std,n_seeds\n"
        "DLinear,count,1d,within_event,,n/a,MAE,,0.5,0.25,5\n"
        "DLinear,sentiment,1d,structure_aware,,n/a,MAE_reply,10,1,0,5\n");
  fixtures::TempDir dir("report");
  write_file(dir / "r.csv", text);
  const auto back = read_report_csv(dir / "r.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].k == 10.0);
  CHECK_FALSE(back[0].k.has_value());
  CHECK(back[0].mean == 0.5);

  // External rows: shuffled columns and no held_out column.
  write_file(dir / "ext.csv",
             "metric,model,target,granularity,protocol,text_config,k,mean,std,n_seeds\n"
             "MAE,LLM-probe,count,1d,within_event,structured,,0.4,0.01,3\n");
  const auto ext = read_report_csv(dir / "ext.csv");
  REQUIRE(ext.size() == 1);
  CHECK(ext[0].model == "LLM-probe");
  CHECK(ext[0].held_out.empty());
  const auto merged = merge_reports(back, ext);
  CHECK(merged.size() == 3);
  CHECK(merged.back().model == "LLM-probe");
  CHECK_THROWS_AS(merge_reports(merged, ext), std::invalid_argument);

  write_file(dir / "bad.csv", "model,target\nx,y\n");
  CHECK_THROWS_AS(read_report_csv(dir / "bad.csv"), ParseError);
}

TEST_CASE("run_protocol within_event") {
  const auto data = walk_data(4, 60);
  const auto result = run_protocol(data, quick(Protocol::within_event));
  // 3 models x 2 targets x 2 metrics
  CHECK(result.rows.size() == 12);
  for (const auto& r : result.rows) {
    CHECK(r.n_seeds == 3);
    CHECK(r.text_config == "n/a");
    if (r.model != "DLinear") CHECK(r.std == 0.0);
  }
}

TEST_CASE("run_protocol loco and text_augmented") {
  const auto data = walk_data(5, 40);
  auto loco = quick(Protocol::loco);
  loco.targets = {Target::intensity};
  loco.models = {ModelKind::last_value};
  const auto result = run_protocol(data, loco);
  std::set<std::string> held;
  for (const auto& r : result.rows) held.insert(r.held_out);
  CHECK(held.size() == 5);

  auto single = walk_data(1, 40);
  CHECK_THROWS_AS(run_protocol(single, loco), std::invalid_argument);

  auto text = quick(Protocol::text_augmented);
  text.models = {ModelKind::moving_average};
  CHECK_THROWS_AS(run_protocol(data, text), MissingArtifact);
  auto with_views = data;
  with_views.views_available[Granularity::day] = true;
  const auto rows = run_protocol(with_views, text).rows;
  CHECK(rows.size() == 12);
  CHECK(rows[0].mean == rows[2].mean);
  CHECK(rows[0].text_config == "none");
  CHECK(rows[2].text_config == "flat");
  CHECK(rows[4].text_config == "structured");
}

TEST_CASE("run_protocol structure_aware") {
  const auto data = walk_data(4, 60);
  auto opts = quick(Protocol::structure_aware);
  const auto result = run_protocol(data, opts);
  CHECK(result.rows.size() == 4 * 3);
  for (const auto& r : result.rows) {
    CHECK(r.metric == "MAE_reply");
    CHECK(r.target == "sentiment");
    CHECK(r.k.has_value());
  }
  opts.k_percents = {0.0};
  CHECK_THROWS_AS(run_protocol(data, opts), std::invalid_argument);
}
