#include <random>

#include <benchmark/benchmark.h>

#include "eventcast/baselines.hpp"
#include "eventcast/interaction_graph.hpp"
#include "eventcast/synth.hpp"
#include "eventcast/text_views.hpp"
#include "eventcast/unicode_text.hpp"

using namespace eventcast;

namespace {

void BM_NormalizeText(benchmark::State& state) {
  const std::string text =
      "  RT @someone: The River is RISING fast near www.news.org/live and https://t.co/abc \t"
      "please stay safe  \xC2\xA0 everyone @Alice_1 ";
  for (auto _ : state) benchmark::DoNotOptimize(normalize_text(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_NormalizeText);

void BM_BuildSeries(benchmark::State& state) {
  SynthSpec spec;
  spec.n_days = 30;
  spec.base_rate = static_cast<double>(state.range(0));
  spec.seed = 7;
  const auto event = generate_event(spec);
  const auto replied = replied_targets(build_edges(event));
  for (auto _ : state) benchmark::DoNotOptimize(build_series(event, Granularity::quarter_day, replied));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * event.posts.size()));
}
BENCHMARK(BM_BuildSeries)->Arg(50)->Arg(200);

void BM_DLinearGradient(benchmark::State& state) {
  const auto lookback = static_cast<std::size_t>(state.range(0));
  const std::size_t horizon = lookback / 2;
  const auto params = DLinearParams::random(lookback, horizon, 1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  std::vector<Sample> batch(32);
  for (auto& s : batch) {
    std::vector<double> x(lookback);
    for (auto& v : x) v = z(rng);
    s.input = decompose(x, params.kernel);
    s.target.assign(horizon, z(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(dlinear_gradient(params, batch));
}
BENCHMARK(BM_DLinearGradient)->Arg(14)->Arg(28)->Arg(56);

void BM_SelectPosts(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<UnifiedPost> posts;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    UnifiedPost p;
    p.post_id = "p" + std::to_string(i);
    p.timestamp_utc = static_cast<std::int64_t>(rng() % 86400);
    if (i > 0 && rng() % 2) {
      p.parent_id = posts[rng() % posts.size()].post_id;
      p.interaction_kind = InteractionKind::reply;
    }
    posts.push_back(std::move(p));
  }
  for (auto _ : state) benchmark::DoNotOptimize(select_posts(0, posts));
}
BENCHMARK(BM_SelectPosts)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
