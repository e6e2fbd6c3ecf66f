#include "eventcast/series.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "eventcast/io.hpp"

namespace eventcast {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  bool any = false;
};

// Population moments over the present values of one segment.
Moments train_moments(const std::vector<Bin>& bins, bool counts) {
  double sum = 0.0;
  std::size_t n = 0;
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& b : bins) {
    if (b.split != Split::train) continue;
    const auto& v = counts ? b.count_filled : b.sentiment_filled;
    if (!v) continue;
    if (n == 0) lo = hi = *v;
    lo = std::min(lo, *v);
    hi = std::max(hi, *v);
    sum += *v;
    ++n;
  }
  Moments m;
  if (n == 0) return m;
  m.any = true;
  m.mean = sum / static_cast<double>(n);
  if (lo == hi) {
    m.mean = lo;
    return m;
  }
  double ss = 0.0;
  for (const auto& b : bins) {
    if (b.split != Split::train) continue;
    const auto& v = counts ? b.count_filled : b.sentiment_filled;
    if (!v) continue;
    const double d = *v - m.mean;
    ss += d * d;
  }
  m.sd = std::sqrt(ss / static_cast<double>(n));
  return m;
}

std::optional<double> opt_double(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return parse_double(cell);
}

}  // namespace

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::day: return "1d";
    case Granularity::half_day: return "12h";
    case Granularity::quarter_day: return "6h";
  }
  return "?";
}

Granularity parse_granularity(std::string_view s) {
  if (s == "1d") return Granularity::day;
  if (s == "12h") return Granularity::half_day;
  if (s == "6h") return Granularity::quarter_day;
  throw ParseError("unknown granularity: " + std::string(s));
}

std::int64_t width_seconds(Granularity g) {
  switch (g) {
    case Granularity::day: return 86400;
    case Granularity::half_day: return 43200;
    case Granularity::quarter_day: return 21600;
  }
  return 86400;
}

WindowShape window_shape(Granularity g) {
  switch (g) {
    case Granularity::day: return {14, 7};
    case Granularity::half_day: return {28, 14};
    case Granularity::quarter_day: return {56, 28};
  }
  return {14, 7};
}

std::int64_t assign_bin(std::int64_t timestamp_utc, Granularity g) {
  const std::int64_t w = width_seconds(g);
  return floor_div(timestamp_utc, w) * w;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ParseError("unknown split: " + std::string(s));
}

std::string_view to_string(Target t) { return t == Target::intensity ? "count" : "sentiment"; }

Target parse_target(std::string_view s) {
  if (s == "count" || s == "intensity") return Target::intensity;
  if (s == "sentiment" || s == "polarity") return Target::polarity;
  throw ParseError("unknown target: " + std::string(s));
}

Targets derive_targets(std::span<const SentimentScore> bin_scores) {
  Targets t;
  if (bin_scores.empty()) return t;
  long sum = 0;
  for (const auto& s : bin_scores) sum += s.value();
  t.count = static_cast<std::int64_t>(bin_scores.size());
  t.sentiment = static_cast<double>(sum) / static_cast<double>(bin_scores.size());
  return t;
}

std::optional<ActivePeriod> detect_active_period(std::span<const std::int64_t> counts) {
  if (counts.empty()) return std::nullopt;
  std::int64_t total = 0;
  for (auto c : counts) total += std::max<std::int64_t>(c, 0);
  if (total == 0) return std::nullopt;
  // count >= 0.05 * total / n, kept in integers.
  const auto n = static_cast<std::int64_t>(counts.size());
  auto reaches = [&](std::int64_t c) { return std::max<std::int64_t>(c, 0) * 20 * n >= total; };
  std::size_t first = 0;
  while (first < counts.size() && !reaches(counts[first])) ++first;
  if (first == counts.size()) return std::nullopt;
  std::size_t last = counts.size() - 1;
  while (!reaches(counts[last])) --last;
  return ActivePeriod{first, last};
}

bool enforce_min_bins(std::size_t n_bins, std::size_t min_bins) { return n_bins >= min_bins; }

SplitSizes split_sizes(std::size_t n_bins) {
  SplitSizes s;
  s.train = n_bins * 7 / 10;
  s.val = n_bins / 10;
  s.test = n_bins - s.train - s.val;
  return s;
}

std::vector<Split> chronological_split(std::size_t n_bins) {
  const auto s = split_sizes(n_bins);
  std::vector<Split> out(n_bins, Split::test);
  std::fill_n(out.begin(), s.train, Split::train);
  std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(s.train), s.val, Split::val);
  return out;
}

ImputedSequence impute_segments(std::span<const std::optional<double>> values, std::span<const Split> splits) {
  if (values.size() != splits.size()) throw std::invalid_argument("impute_segments: length mismatch");
  ImputedSequence out;
  out.values.assign(values.begin(), values.end());
  std::size_t begin = 0;
  while (begin < values.size()) {
    std::size_t end = begin;
    while (end < values.size() && splits[end] == splits[begin]) ++end;

    std::optional<double> last;
    std::optional<std::size_t> first_seen;
    for (std::size_t i = begin; i < end; ++i) {
      if (out.values[i]) {
        last = out.values[i];
        if (!first_seen) first_seen = i;
      } else if (last) {
        out.values[i] = last;
      }
    }
    if (!first_seen) {
      out.fully_missing_segments.push_back(splits[begin]);
    } else {
      for (std::size_t i = begin; i < *first_seen; ++i) out.values[i] = out.values[*first_seen];
    }
    begin = end;
  }
  return out;
}

void impute_split_local(EventSeries& series) {
  std::vector<std::optional<double>> counts;
  std::vector<std::optional<double>> sentiments;
  std::vector<Split> splits;
  for (const auto& b : series.bins) {
    counts.push_back(b.count ? std::optional<double>(static_cast<double>(*b.count)) : std::nullopt);
    sentiments.push_back(b.sentiment);
    splits.push_back(b.split);
  }
  auto c = impute_segments(counts, splits);
  auto s = impute_segments(sentiments, splits);
  for (std::size_t i = 0; i < series.bins.size(); ++i) {
    series.bins[i].count_filled = c.values[i];
    series.bins[i].sentiment_filled = s.values[i];
  }
  // count and sentiment share their missingness, so one list covers both.
  for (Split sp : c.fully_missing_segments) {
    std::string flag = std::string(to_string(sp)) + "_all_missing";
    if (std::find(series.flags.begin(), series.flags.end(), flag) == series.flags.end())
      series.flags.push_back(std::move(flag));
  }
}

void zscore_normalize(EventSeries& series) {
  const Moments mc = train_moments(series.bins, true);
  const Moments ms = train_moments(series.bins, false);
  if (!mc.any || !ms.any) throw SeriesRejected("train segment has no observation");
  series.norm_stats = NormStats{mc.mean, mc.sd, ms.mean, ms.sd};
  auto z = [](const std::optional<double>& v, const Moments& m) -> std::optional<double> {
    if (!v) return std::nullopt;
    if (m.sd == 0.0) return 0.0;
    return (*v - m.mean) / m.sd;
  };
  for (auto& b : series.bins) {
    b.count_z = z(b.count_filled, mc);
    b.sentiment_z = z(b.sentiment_filled, ms);
  }
}

std::vector<ForecastWindow> make_windows(const EventSeries& series, Target target, std::size_t lookback,
                                         std::size_t horizon) {
  std::vector<ForecastWindow> out;
  const std::size_t n = series.size();
  if (lookback == 0 || horizon == 0 || n < lookback + horizon) return out;
  const std::size_t count = n - lookback - horizon + 1;
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t h0 = s + lookback;
    const Split first_split = series.bins[h0].split;
    bool contained = true;
    for (std::size_t i = h0; i < h0 + horizon; ++i) contained = contained && series.bins[i].split == first_split;
    const bool final_window = s + 1 == count;
    if (!contained && !final_window) continue;

    ForecastWindow w;
    w.event_id = series.event_id;
    w.category = series.category;
    w.target = target;
    w.start = s;
    w.split = contained ? first_split : Split::test;
    bool complete = true;
    for (std::size_t i = s; i < h0 && complete; ++i) {
      const auto v = series.normalized(i, target);
      if (!v) complete = false;
      else w.lookback.push_back(*v);
    }
    for (std::size_t i = h0; i < h0 + horizon && complete; ++i) {
      const auto v = series.normalized(i, target);
      if (!v) complete = false;
      else {
        w.horizon.push_back(*v);
        w.horizon_bin_indices.push_back(i);
      }
    }
    if (complete) out.push_back(std::move(w));
  }
  return out;
}

BuildOutcome build_series(const EventRecord& event, Granularity g, const std::unordered_set<std::string>& replied_to,
                          const BuildOptions& options) {
  BuildOutcome outcome;
  std::vector<const UnifiedPost*> posts;
  for (const auto& p : event.posts)
    if (p.sentiment) posts.push_back(&p);
  if (posts.empty()) {
    outcome.dropped_reason = "no_labeled_posts";
    return outcome;
  }
  std::sort(posts.begin(), posts.end(), [](const UnifiedPost* a, const UnifiedPost* b) { return chronological_less(*a, *b); });

  const std::int64_t width = width_seconds(g);
  const std::int64_t first_bin = assign_bin(posts.front()->timestamp_utc, g);
  const std::int64_t last_bin = assign_bin(posts.back()->timestamp_utc, g);
  const auto timeline = static_cast<std::size_t>((last_bin - first_bin) / width + 1);

  std::vector<std::vector<const UnifiedPost*>> grouped(timeline);
  for (const auto* p : posts) grouped[static_cast<std::size_t>((assign_bin(p->timestamp_utc, g) - first_bin) / width)].push_back(p);

  std::vector<std::int64_t> counts(timeline);
  for (std::size_t i = 0; i < timeline; ++i) counts[i] = static_cast<std::int64_t>(grouped[i].size());
  const auto active = detect_active_period(counts);
  if (!active) {
    outcome.dropped_reason = "no_active_period";
    return outcome;
  }
  const std::size_t n = active->last - active->first + 1;
  if (!enforce_min_bins(n, options.min_bins)) {
    outcome.dropped_reason = "too_few_bins";
    return outcome;
  }

  EventSeries series;
  series.event_id = event.event_id;
  series.category = event.category;
  series.granularity = g;
  const auto splits = chronological_split(n);
  series.bins.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& bin_posts = grouped[active->first + k];
    Bin& b = series.bins[k];
    b.bin_start_utc = first_bin + static_cast<std::int64_t>(active->first + k) * width;
    b.split = splits[k];
    std::vector<SentimentScore> scores;
    scores.reserve(bin_posts.size());
    std::size_t interacting = 0;
    for (const auto* p : bin_posts) {
      scores.emplace_back(*p->sentiment);
      if (p->parent_id || replied_to.count(p->post_id) != 0) ++interacting;
    }
    const auto t = derive_targets(scores);
    b.count = t.count;
    b.sentiment = t.sentiment;
    if (!bin_posts.empty())
      b.reply_ratio = static_cast<double>(interacting) / static_cast<double>(bin_posts.size());
    outcome.active_posts += bin_posts.size();
  }

  impute_split_local(series);
  try {
    zscore_normalize(series);
  } catch (const SeriesRejected&) {
    outcome.dropped_reason = "empty_train";
    outcome.active_posts = 0;
    return outcome;
  }
  outcome.series = std::move(series);
  return outcome;
}

std::pair<std::int64_t, std::int64_t> series_span(const EventSeries& series) {
  if (series.bins.empty()) return {0, 0};
  return {series.bins.front().bin_start_utc,
          series.bins.back().bin_start_utc + width_seconds(series.granularity)};
}

std::string series_to_csv(const EventSeries& series) {
  std::ostringstream out;
  out << "bin_start_utc,count,sentiment,count_z,sentiment_z,split,reply_ratio\n";
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& b : series.bins) {
    out << format_iso8601(b.bin_start_utc) << ',' << (b.count ? std::to_string(*b.count) : std::string()) << ','
        << cell(b.sentiment) << ',' << cell(b.count_z) << ',' << cell(b.sentiment_z) << ',' << to_string(b.split)
        << ',' << cell(b.reply_ratio) << '\n';
  }
  return out.str();
}

nlohmann::json series_sidecar(const EventSeries& series) {
  const auto sizes = split_sizes(series.size());
  return nlohmann::json{{"event_id", series.event_id},
                        {"category", to_string(series.category)},
                        {"granularity", to_string(series.granularity)},
                        {"mu_c", series.norm_stats.mu_c},
                        {"sigma_c", series.norm_stats.sigma_c},
                        {"mu_s", series.norm_stats.mu_s},
                        {"sigma_s", series.norm_stats.sigma_s},
                        {"n_bins", series.size()},
                        {"splits", {{"train", sizes.train}, {"val", sizes.val}, {"test", sizes.test}}},
                        {"flags", series.flags}};
}

void write_series(const EventSeries& series, const std::filesystem::path& dir) {
  write_file(dir / (series.event_id + ".csv"), series_to_csv(series));
  write_file(dir / (series.event_id + ".json"), series_sidecar(series).dump(2) + "\n");
}

EventSeries read_series(const std::filesystem::path& csv_path) {
  auto sidecar_path = csv_path;
  sidecar_path.replace_extension(".json");
  const auto meta = nlohmann::json::parse(read_file(sidecar_path));
  EventSeries s;
  try {
    s.event_id = meta.at("event_id").get<std::string>();
    s.category = parse_category(meta.at("category").get<std::string>());
    s.granularity = parse_granularity(meta.at("granularity").get<std::string>());
    s.norm_stats = NormStats{meta.at("mu_c").get<double>(), meta.at("sigma_c").get<double>(),
                             meta.at("mu_s").get<double>(), meta.at("sigma_s").get<double>()};
    if (meta.contains("flags")) s.flags = meta.at("flags").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(sidecar_path.string() + ": " + e.what());
  }

  const auto lines = read_lines(csv_path);
  if (lines.empty() || lines.front().rfind("bin_start_utc,count,sentiment,count_z,sentiment_z,split", 0) != 0)
    throw ParseError(csv_path.string() + ": unexpected header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() < 6) throw ParseError(csv_path.string() + ": short row " + std::to_string(i + 1));
    Bin b;
    const auto ts = parse_timestamp(f[0]);
    if (!ts) throw ParseError(csv_path.string() + ": bad timestamp on row " + std::to_string(i + 1));
    b.bin_start_utc = *ts;
    if (!f[1].empty()) b.count = std::stoll(f[1]);
    b.sentiment = opt_double(f[2]);
    b.count_z = opt_double(f[3]);
    b.sentiment_z = opt_double(f[4]);
    b.split = parse_split(f[5]);
    if (f.size() > 6) b.reply_ratio = opt_double(f[6]);
    s.bins.push_back(b);
  }
  std::vector<std::string> flags = s.flags;
  impute_split_local(s);
  s.flags = std::move(flags);
  return s;
}

std::vector<EventSeries> read_series_dir(const std::filesystem::path& series_root, Granularity g) {
  const auto dir = series_root / std::string(to_string(g));
  if (!std::filesystem::is_directory(dir)) throw MissingArtifact(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  std::vector<EventSeries> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(read_series(p));
  return out;
}

}  // namespace eventcast
