// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "eventcast/evaluation.hpp"
#include "eventcast/pipeline.hpp"
#include "eventcast/text_views.hpp"
#include "eventcast/unicode_text.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace eventcast;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome ok(std::string detail) { return {true, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, std::move(detail)}; }

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string tree_bytes(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string out;
  for (const auto& f : files) out += std::filesystem::relative(f, root).string() + "\n" + read_file(f) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Shared synthetic corpus: 20 events x 5,000 posts.

constexpr std::size_t kEvents = 20;
constexpr std::size_t kPostsPerEvent = 5000;
constexpr const char* kSalt = "acceptance";
constexpr const char* kPinnedTime = "2022-02-04T00:00:00Z";

struct Corpus {
  fixtures::TempDir root{"acceptance"};
  std::vector<double> run_seconds;
  std::map<Granularity, std::vector<EventSeries>> series;

  [[nodiscard]] std::filesystem::path raw() const { return root / "raw"; }
  [[nodiscard]] std::filesystem::path labels() const { return root / "gold.jsonl"; }
  [[nodiscard]] std::filesystem::path run_dir(int i) const { return root / ("run" + std::to_string(i)); }
};

void write_raw_corpus(const Corpus& c) {
  const Anonymizer anonymizer(kSalt);
  LabelCache gold;
  for (std::size_t i = 0; i < kEvents; ++i) {
    SynthSpec spec;
    spec.event_id = "acc-" + std::to_string(i);
    spec.category = kAllCategories[i % std::size(kAllCategories)];
    spec.regime = i % 2 == 0 ? Regime::burst : Regime::sustained;
    spec.n_days = 60;
    spec.base_rate = spec.regime == Regime::burst ? 74 : 51;
    spec.sentiment_drift = (static_cast<double>(i % 5) - 2.0) * 0.02;
    spec.seed = 1000 + i;
    auto event = generate_event(spec);
    if (event.posts.size() < kPostsPerEvent) throw std::runtime_error("synthetic event too small");
    event.posts.resize(kPostsPerEvent);
    std::string out;
    for (const auto& r : raw_records(event)) out += r.dump() + "\n";
    write_file(c.raw() / (spec.event_id + ".jsonl"), out);
    for (auto& rec : gold_labels(event, anonymizer)) gold.put(std::move(rec));
  }
  gold.save(c.labels());
}

PipelineConfig run_config(const Corpus& c, int i) {
  PipelineConfig config;
  config.work_dir = c.run_dir(i);
  config.raw_dir = c.raw();
  config.salt = kSalt;
  config.generated_at = kPinnedTime;
  config.jobs = 1;
  return config;
}

Corpus& corpus() {
  static Corpus built;
  static bool ready = false;
  if (!ready) {
    built.run_seconds.clear();
    write_raw_corpus(built);
    for (int i = 0; i < 2; ++i) {
      const auto config = run_config(built, i);
      const auto t0 = std::chrono::steady_clock::now();
      run_ingest(config);
      import_labels(config, built.labels());
      run_build(config);
      run_views(config);
      built.run_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    for (Granularity g : kAllGranularities) built.series[g] = read_series_dir(built.run_dir(0) / "series", g);
    ready = true;
  }
  return built;
}

// ---------------------------------------------------------------------------
// Criteria

Outcome pipeline_determinism() {
  auto& c = corpus();
  for (const char* sub : {"corpus", "edges", "series", "views"}) {
    if (!std::filesystem::is_directory(c.run_dir(0) / sub)) return fail(std::string("no ") + sub + " output");
    if (tree_bytes(c.run_dir(0) / sub) != tree_bytes(c.run_dir(1) / sub))
      return fail(std::string(sub) + " differs between runs");
  }
  std::size_t n_series = 0;
  for (const auto& [g, s] : c.series) n_series += s.size();
  const double slowest = *std::max_element(c.run_seconds.begin(), c.run_seconds.end());
  const std::string detail = std::to_string(kEvents) + " events x " + std::to_string(kPostsPerEvent) + " posts, " +
                             std::to_string(n_series) + " series, slowest run " + fmt(slowest) + " s";
  if (n_series == 0) return fail("no series built; " + detail);
  if (slowest >= 120.0) return fail(detail);
  return ok(detail);
}

Outcome filter_oracle() {
  std::mt19937_64 rng(2024);
  std::set<std::string> seen_oracle;
  std::unordered_set<std::string> seen;
  std::vector<std::vector<std::size_t>> history;
  std::map<std::string, std::size_t> by_rule;
  const StopwordLanguageDetector detector;
  for (int i = 0; i < 1000; ++i) {
    auto tokens = (!history.empty() && rng() % 5 == 0) ? oracle::duplicate_variant(history[rng() % history.size()], rng)
                                                       : oracle::random_tokens(rng);
    history.push_back(tokens);
    const auto c = oracle::compose(tokens, rng);
    const auto expected = oracle::filter(c, seen_oracle);
    UnifiedPost p = fixtures::post("p" + std::to_string(i), i, c.text);
    const auto actual = filter_post(p, seen, detector);
    if (!(actual == expected)) return fail("post " + std::to_string(i) + " disagrees: [" + c.text + "]");
    ++by_rule[expected.kept ? "kept" : std::string(to_string(*expected.removed_by))];
    if (expected.kept) {
      seen_oracle.insert(oracle::normalized(c));
      seen.insert(normalize_text(c.text));
    }
  }
  std::string detail = "1000/1000 agree (";
  for (const auto& [k, v] : by_rule) detail += k + "=" + std::to_string(v) + " ";
  detail.back() = ')';
  return ok(detail);
}

Outcome active_period_oracle() {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::int64_t> counts(1 + rng() % 50);
    const int shape = static_cast<int>(rng() % 3);
    for (auto& v : counts) {
      if (shape == 0) v = static_cast<std::int64_t>(rng() % 10);
      else if (shape == 1) v = rng() % 3 == 0 ? static_cast<std::int64_t>(rng() % 200) : 0;
      else v = rng() % 10 == 0 ? 1000 : static_cast<std::int64_t>(rng() % 4);
    }
    if (detect_active_period(counts) != oracle::active_period(counts))
      return fail("series " + std::to_string(trial) + " of length " + std::to_string(counts.size()));
  }
  return ok("500/500 exact");
}

std::string train_val_digest(const EventSeries& s) {
  std::string bytes;
  auto put = [&](const std::optional<double>& v) { bytes += (v ? format_double(*v) : std::string("-")) + ","; };
  for (const auto& b : s.bins) {
    if (b.split == Split::test) continue;
    put(b.count_filled);
    put(b.sentiment_filled);
    put(b.count_z);
    put(b.sentiment_z);
  }
  for (double v : {s.norm_stats.mu_c, s.norm_stats.sigma_c, s.norm_stats.mu_s, s.norm_stats.sigma_s})
    bytes += format_double(v) + ",";
  return std::to_string(fnv1a(bytes));
}

void reprocess(EventSeries& s) {
  s.flags.clear();
  for (auto& b : s.bins) {
    b.count_filled.reset();
    b.sentiment_filled.reset();
    b.count_z.reset();
    b.sentiment_z.reset();
  }
  impute_split_local(s);
  zscore_normalize(s);
}

Outcome split_locality() {
  std::mt19937_64 rng(5);
  std::size_t checked = 0;
  for (const auto& [g, all] : corpus().series)
    for (const auto& original : all) {
      EventSeries base = original;
      // CSV round trips do not carry the filled values, so recompute them first.
      reprocess(base);
      const auto want = train_val_digest(base);
      for (int trial = 0; trial < 5; ++trial) {
        EventSeries s = original;
        for (auto& b : s.bins) {
          if (b.split != Split::test) continue;
          if (rng() % 4 == 0) {
            b.count.reset();
            b.sentiment.reset();
          } else {
            b.count = static_cast<std::int64_t>(1 + rng() % 100000);
            b.sentiment = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
          }
        }
        reprocess(s);
        if (train_val_digest(s) != want) return fail(s.event_id + " at " + std::string(to_string(g)));
        ++checked;
      }
    }
  if (checked == 0) return fail("no series");
  return ok(std::to_string(checked) + " randomized copies, train/val digests unchanged");
}

Outcome normalization() {
  std::size_t checked = 0;
  double worst_mean = 0.0;
  double worst_std = 0.0;
  for (const auto& [g, all] : corpus().series)
    for (const auto& s : all)
      for (Target t : kAllTargets) {
        const double sigma = t == Target::intensity ? s.norm_stats.sigma_c : s.norm_stats.sigma_s;
        if (!(sigma > 0.0)) continue;
        std::vector<double> z;
        for (std::size_t i = 0; i < s.size(); ++i)
          if (s.bins[i].split == Split::train && s.normalized(i, t)) z.push_back(*s.normalized(i, t));
        double mean = 0.0;
        for (double v : z) mean += v;
        mean /= static_cast<double>(z.size());
        double ss = 0.0;
        for (double v : z) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(z.size()));
        worst_mean = std::max(worst_mean, std::abs(mean));
        worst_std = std::max(worst_std, std::abs(sd - 1.0));
        ++checked;
      }
  const std::string detail = std::to_string(checked) + " series/targets, max |mean| " + fmt(worst_mean) +
                             ", max |std-1| " + fmt(worst_std);
  if (checked == 0) return fail("no series with sigma > 0");
  return worst_mean <= 1e-9 && worst_std <= 1e-9 ? ok(detail) : fail(detail);
}

Outcome metric_identities() {
  const auto& day = corpus().series.at(Granularity::day);
  const auto shape = window_shape(Granularity::day);
  BinErrorMap errors;
  std::size_t windows = 0;
  const auto random_model = DLinearParams::random(shape.lookback, shape.horizon, 11);
  for (const auto& s : day)
    for (Target t : kAllTargets)
      for (const auto& w : make_windows(s, t, shape.lookback, shape.horizon)) {
        for (const auto& pred : {last_value_forecast(w.lookback, shape.horizon),
                                 moving_average_forecast(w.lookback, kMovingAverageWindow, shape.horizon),
                                 dlinear_forecast(w.lookback, random_model)}) {
          const double a = mae(pred, w.horizon);
          if (mse(pred, w.horizon) < a * a * (1.0 - 1e-12))
            return fail("MSE < MAE^2 on " + w.event_id + ":" + std::to_string(w.start));
          ++windows;
        }
        if (t == Target::polarity && w.split == Split::test)
          errors.add_window(w, last_value_forecast(w.lookback, shape.horizon));
      }
  const auto per_bin = errors.means();
  std::vector<ScoredBin> pooled;
  std::map<BinRef, double> covered;
  for (const auto& b : pooled_test_bins(day))
    if (const auto it = per_bin.find(b.bin); it != per_bin.end()) {
      pooled.push_back(b);
      covered.insert(*it);
    }
  if (pooled.empty()) return fail("no pooled test bins");
  const auto all = high_interaction_subset(pooled, 100);
  const double reply100 = *mae_reply(per_bin, all);
  if (reply100 != per_bin_mae(covered))
    return fail("MAE_reply(100) " + format_double(reply100) + " != " + format_double(per_bin_mae(covered)));

  std::vector<BinRef> previous;
  for (int k = 1; k <= 100; ++k) {
    auto s = high_interaction_subset(pooled, k);
    if (!std::includes(s.begin(), s.end(), previous.begin(), previous.end()))
      return fail("S(" + std::to_string(k - 1) + ") not inside S(" + std::to_string(k) + ")");
    previous = std::move(s);
  }
  return ok(std::to_string(pooled.size()) + " pooled bins, k = 1..100 nested, " + std::to_string(windows) +
            " window checks");
}

Outcome noise_bound() {
  const auto sim = simulate_bin_mean_noise(100, 0.2, 10000, 31337);
  const double analytic = aggregation_noise_bound(100, 0.2, 1);
  const double limit = 0.0894 + 3.0 * sim.standard_error;
  const std::string detail =
      "empirical std " + fmt(sim.empirical_std) + " <= " + fmt(limit) + "; analytic " + format_double(analytic);
  if (sim.empirical_std > limit) return fail(detail);
  if (std::abs(analytic - 0.08944) > 1e-5) return fail(detail);
  return ok(detail);
}

Outcome naive_determinism() {
  EvalData data;
  for (const auto& [g, s] : corpus().series) data.series[g] = s;
  EvalOptions options;
  options.models = {ModelKind::last_value, ModelKind::moving_average};
  options.seeds = {0, 1, 2, 3, 4};
  const auto rows = run_protocol(data, options).rows;
  if (rows.empty()) return fail("no rows");
  for (const auto& r : rows) {
    if (r.n_seeds != 5) return fail(r.model + " ran " + std::to_string(r.n_seeds) + " seeds");
    if (r.std != 0.0) return fail(r.model + " " + r.target + " " + r.granularity + " std " + format_double(r.std));
  }
  return ok(std::to_string(rows.size()) + " rows with std == 0");
}

Outcome gradient_check() {
  if (dlinear_kernel(14) != 15 || dlinear_kernel(30) != 25 || dlinear_kernel(1) != 3)
    return fail("kernel formula");
  std::mt19937_64 rng(123);
  std::normal_distribution<double> z;
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t L = 1 + rng() % 30;
    const std::size_t H = 1 + rng() % 8;
    auto params = DLinearParams::random(L, H, rng());
    std::vector<Sample> batch(1 + rng() % 8);
    for (auto& s : batch) {
      std::vector<double> x(L);
      for (auto& v : x) v = 2.0 * z(rng);
      s.input = decompose(x, params.kernel);
      s.target.resize(H);
      for (auto& v : s.target) v = z(rng);
    }
    const auto analytic = dlinear_gradient(params, batch);
    const auto theta = params.flatten();
    const double h = 1e-5;
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      auto plus = theta;
      auto minus = theta;
      plus[k] += h;
      minus[k] -= h;
      DLinearParams a = params;
      DLinearParams b = params;
      a.assign(plus);
      b.assign(minus);
      const double numeric = (dlinear_loss(a, batch) - dlinear_loss(b, batch)) / (2.0 * h);
      diff += (numeric - analytic[k]) * (numeric - analytic[k]);
      norm += std::max(numeric * numeric, analytic[k] * analytic[k]);
    }
    worst = std::max(worst, norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff));
  }
  const std::string detail = "100 draws, max relative error " + fmt(worst) + "; kernels 15/25/3";
  return worst <= 1e-4 ? ok(detail) : fail(detail);
}

Outcome persistence() {
  EvalData data;
  for (std::size_t i = 0; i < 20; ++i) {
    RandomWalkSpec spec;
    spec.event_id = "walk-" + std::to_string(i);
    spec.category = kAllCategories[i % std::size(kAllCategories)];
    spec.n_bins = 300;
    spec.seed = 9000 + i;
    data.series[Granularity::day].push_back(random_walk_series(spec));
  }
  EvalOptions options;
  options.granularities = {Granularity::day};
  options.targets = {Target::intensity};
  options.models = {ModelKind::last_value, ModelKind::dlinear};
  const auto rows = run_protocol(data, options).rows;
  std::map<std::pair<std::string, std::string>, double> at;
  for (const auto& r : rows) at[{r.model, r.metric}] = r.mean;
  const double lv_mae = at.at({"LastValue", "MAE"});
  const double lv_mse = at.at({"LastValue", "MSE"});
  const double dl_mae = at.at({"DLinear", "MAE"});
  const double dl_mse = at.at({"DLinear", "MSE"});
  const std::string detail = "LastValue MAE " + fmt(lv_mae) + " MSE " + fmt(lv_mse) + "; DLinear MAE " +
                             fmt(dl_mae) + " MSE " + fmt(dl_mse);
  return dl_mae >= 0.95 * lv_mae && dl_mse < lv_mse ? ok(detail) : fail(detail);
}

using Pairs = std::multiset<std::pair<std::string, std::string>>;

std::optional<Pairs> parse_view(const std::string& text, const std::regex& line_re) {
  Pairs out;
  if (text.empty()) return out;
  std::istringstream in(text);
  std::string line;
  std::smatch m;
  while (std::getline(in, line)) {
    if (!std::regex_match(line, m, line_re)) return std::nullopt;
    out.emplace(m[1], m[2]);
  }
  return out;
}

Outcome text_view_contract() {
  static const std::vector<std::string> words = {"flood", "water", "rising", "caf\xC3\xA9", "\xF0\x9F\x94\xA5",
                                                 "news",  "vote",  "again",  "\xD0\x9F\xD1\x80\xD0\xB8",  "ok"};
  const std::regex structured_re(R"(^(?:   >> )?(User\d+) (?:said|replied): (.*)$)");
  const std::regex flat_re(R"(^(User\d+): (.*)$)");
  std::mt19937_64 rng(1000);
  std::size_t truncated = 0;
  std::size_t compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::int64_t bin_start = fixtures::kFeb4 + 86400LL * (trial % 7);
    std::vector<UnifiedPost> posts;
    ViewTexts texts;
    const auto n = rng() % 25;
    for (std::size_t i = 0; i < n; ++i) {
      std::optional<std::string> parent;
      if (i > 0 && rng() % 2) parent = rng() % 5 == 0 ? "elsewhere" : posts[rng() % i].post_id;
      std::string text;
      const auto n_words = rng() % 10 == 0 ? 200 + rng() % 200 : 1 + rng() % 12;
      for (std::size_t w = 0; w < n_words; ++w) text += (w ? (rng() % 6 ? " " : "\n  ") : "") + words[rng() % words.size()];
      auto p = fixtures::post("q" + std::to_string(rng() % 10000) + "-" + std::to_string(i),
                              bin_start + static_cast<std::int64_t>(rng() % 40), text, parent);
      texts[p.post_id] = ViewPost{"User" + std::to_string(i + 1), collapse_white_space(p.text), p.timestamp_utc};
      posts.push_back(std::move(p));
    }
    const auto sel = select_posts(bin_start, posts);
    if (!(sel == oracle::select(bin_start, posts))) return fail("selection differs in bin " + std::to_string(trial));
    const auto structured = render_structured(sel, texts);
    const auto flat = render_flat(sel, texts);
    if (scalar_count(structured) > 1503 || scalar_count(flat) > 1503)
      return fail("view longer than 1503 in bin " + std::to_string(trial));
    if (structured.ends_with("...") || flat.ends_with("...")) ++truncated;
    const auto a = parse_view(render_structured(sel, texts, std::string::npos), structured_re);
    const auto b = parse_view(render_flat(sel, texts, std::string::npos), flat_re);
    if (!a || !b) return fail("unparseable view in bin " + std::to_string(trial));
    if (*a != *b) return fail("post multisets differ in bin " + std::to_string(trial));
    if (a->size() != sel.post_ids().size()) return fail("post count differs in bin " + std::to_string(trial));
    ++compared;
  }
  return ok(std::to_string(compared) + " bins, multisets equal, " + std::to_string(truncated) +
            " needed truncation");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"pipeline_determinism", pipeline_determinism},
      {"filter_rule_oracle", filter_oracle},
      {"active_period_oracle", active_period_oracle},
      {"split_locality", split_locality},
      {"normalization", normalization},
      {"metric_identities", metric_identities},
      {"noise_bound", noise_bound},
      {"naive_baseline_determinism", naive_determinism},
      {"dlinear_gradient_check", gradient_check},
      {"persistence_regime", persistence},
      {"text_view_contract", text_view_contract},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = fail(std::string("exception: ") + e.what());
    }
    std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << std::endl;
    failures += r.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
