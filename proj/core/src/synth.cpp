#include "eventcast/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "eventcast/annotation.hpp"
#include "eventcast/io.hpp"

namespace eventcast {

namespace {

constexpr std::array kSubjects{"the river", "the city council", "our team", "the new phone", "the match",
                               "the storm", "the protest", "the launch", "the vote", "the rescue crew"};
constexpr std::array kPositive{"great", "hopeful", "wonderful", "amazing", "encouraging"};
constexpr std::array kNeutral{"changing", "being discussed", "in the news", "on schedule", "under review"};
constexpr std::array kNegative{"terrible", "awful", "worrying", "a disaster", "heartbreaking"};
constexpr std::array kTails{"and I think we should all pay attention to it",
                            "and that is what people are saying about it now",
                            "so we will see what happens with it this week",
                            "and it is all that my friends can talk about",
                            "but there is more to it than what we know"};

// Letters-only label for the i-th post so that every text is distinct.
std::string tag(std::size_t i) {
  std::string out = "ref";
  do {
    out += static_cast<char>('a' + i % 26);
    i /= 26;
  } while (i != 0);
  return out;
}

template <class Arr>
const char* pick(const Arr& arr, std::mt19937_64& rng) {
  return arr[std::uniform_int_distribution<std::size_t>(0, arr.size() - 1)(rng)];
}

std::string compose_text(Sentiment s, InteractionKind kind, std::size_t index, std::mt19937_64& rng) {
  const char* adjective = s == Sentiment::positive   ? pick(kPositive, rng)
                          : s == Sentiment::negative ? pick(kNegative, rng)
                                                     : pick(kNeutral, rng);
  std::string text;
  if (kind == InteractionKind::repost) text = "sharing this again: ";
  else if (kind == InteractionKind::reply) text = "I agree with you, ";
  text += std::string(pick(kSubjects, rng)) + " is " + adjective + " " + pick(kTails, rng) + " " + tag(index);
  return text;
}

double intensity_per_day(const SynthSpec& spec, double day) {
  if (spec.regime == Regime::burst) {
    const double onset = std::min(1.0, spec.n_days / 10.0);
    const double tau = std::max(0.5, spec.n_days / 5.0);
    const double rise = day < onset ? day / onset : 1.0;
    const double decay = day < onset ? 1.0 : std::exp(-(day - onset) / tau);
    return spec.base_rate * (0.2 + spec.peak_multiplier * rise * decay);
  }
  constexpr double period = 7.0;
  const double phase = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * day / period));
  return spec.base_rate * (1.0 + (spec.peak_multiplier - 1.0) * std::pow(phase, 8.0));
}

Sentiment draw_sentiment(double drift_logit, std::mt19937_64& rng) {
  const std::array<double, 3> w{std::exp(drift_logit), 1.0, std::exp(-drift_logit)};
  std::discrete_distribution<int> dist(w.begin(), w.end());
  return kAllSentiments[static_cast<std::size_t>(dist(rng))];
}

}  // namespace

std::string_view to_string(Regime r) { return r == Regime::burst ? "burst" : "sustained"; }

Regime parse_regime(std::string_view s) {
  if (s == "burst") return Regime::burst;
  if (s == "sustained") return Regime::sustained;
  throw ParseError("unknown regime: " + std::string(s));
}

void SynthSpec::validate() const {
  if (!(n_days > 0.0)) throw std::invalid_argument("synth spec: n_days must be positive");
  if (!(base_rate >= 0.0) || !(peak_multiplier >= 0.0)) throw std::invalid_argument("synth spec: negative rate");
  if (!(reply_prob >= 0.0 && reply_prob <= 1.0)) throw std::invalid_argument("synth spec: reply_prob outside [0, 1]");
  if (!(repost_share >= 0.0 && repost_share <= 1.0))
    throw std::invalid_argument("synth spec: repost_share outside [0, 1]");
  if (!std::isfinite(sentiment_drift)) throw std::invalid_argument("synth spec: sentiment_drift not finite");
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    s.event_id = j.value("event_id", s.event_id);
    if (j.contains("category")) s.category = parse_category(j.at("category").get<std::string>());
    if (j.contains("regime")) s.regime = parse_regime(j.at("regime").get<std::string>());
    s.n_days = j.value("n_days", s.n_days);
    s.base_rate = j.value("base_rate", s.base_rate);
    s.peak_multiplier = j.value("peak_multiplier", s.peak_multiplier);
    s.reply_prob = j.value("reply_prob", s.reply_prob);
    s.sentiment_drift = j.value("sentiment_drift", s.sentiment_drift);
    s.repost_share = j.value("repost_share", s.repost_share);
    if (j.contains("start_utc")) {
      const auto& v = j.at("start_utc");
      if (v.is_string()) {
        const auto ts = parse_timestamp(v.get<std::string>());
        if (!ts) throw ParseError("synth spec: bad start_utc");
        s.start_utc = *ts;
      } else {
        s.start_utc = v.get<std::int64_t>();
      }
    }
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synth spec: ") + e.what());
  }
  return s;
}

nlohmann::json to_json(const SynthSpec& s) {
  return {{"event_id", s.event_id},       {"category", to_string(s.category)},
          {"regime", to_string(s.regime)}, {"n_days", s.n_days},
          {"base_rate", s.base_rate},     {"peak_multiplier", s.peak_multiplier},
          {"reply_prob", s.reply_prob},   {"sentiment_drift", s.sentiment_drift},
          {"repost_share", s.repost_share}, {"start_utc", format_iso8601(s.start_utc)},
          {"seed", s.seed}};
}

EventRecord generate_event(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto hours = static_cast<std::size_t>(std::ceil(spec.n_days * 24.0));

  std::vector<std::int64_t> stamps;
  for (std::size_t h = 0; h < hours; ++h) {
    const double day = (static_cast<double>(h) + 0.5) / 24.0;
    const double lambda = intensity_per_day(spec, day) / 24.0;
    if (lambda <= 0.0) continue;
    const int k = std::poisson_distribution<int>(lambda)(rng);
    std::uniform_int_distribution<std::int64_t> second(0, 3599);
    for (int i = 0; i < k; ++i) stamps.push_back(spec.start_utc + static_cast<std::int64_t>(h) * 3600 + second(rng));
  }
  std::sort(stamps.begin(), stamps.end());

  EventRecord event;
  event.event_id = spec.event_id;
  event.category = spec.category;
  const std::size_t n_authors = std::max<std::size_t>(5, stamps.size() / 4);
  std::uniform_int_distribution<std::size_t> author(0, n_authors - 1);
  std::bernoulli_distribution becomes_child(spec.reply_prob);
  std::bernoulli_distribution is_repost(spec.repost_share);

  event.posts.reserve(stamps.size());
  for (std::size_t i = 0; i < stamps.size(); ++i) {
    UnifiedPost p;
    p.post_id = spec.event_id + "-p" + std::to_string(i);
    p.event_id = spec.event_id;
    p.platform = Platform::synthetic;
    p.timestamp_utc = stamps[i];
    p.author_id = "u" + std::to_string(author(rng));
    if (i > 0 && becomes_child(rng)) {
      const std::size_t parent = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
      p.parent_id = event.posts[parent].post_id;
      p.interaction_kind = is_repost(rng) ? InteractionKind::repost : InteractionKind::reply;
    }
    const double day = static_cast<double>(stamps[i] - spec.start_utc) / 86400.0;
    p.sentiment = draw_sentiment(spec.sentiment_drift * day, rng);
    p.text = compose_text(*p.sentiment, p.interaction_kind, i, rng);
    event.posts.push_back(std::move(p));
  }
  return event;
}

std::vector<nlohmann::json> raw_records(const EventRecord& event) {
  std::vector<nlohmann::json> out;
  out.reserve(event.posts.size());
  for (const auto& p : event.posts) {
    nlohmann::json r{{"platform", "synthetic"},
                     {"event_id", event.event_id},
                     {"category", to_string(event.category)},
                     {"post_id", p.post_id},
                     {"timestamp_utc", format_iso8601(p.timestamp_utc)},
                     {"text", p.text},
                     {"interaction_kind", to_string(p.interaction_kind)}};
    r["parent_id"] = p.parent_id ? nlohmann::json(*p.parent_id) : nlohmann::json(nullptr);
    if (p.author_id) r["author_id"] = *p.author_id;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LabelRecord> gold_labels(const EventRecord& event, const Anonymizer& anonymizer) {
  std::vector<LabelRecord> out;
  for (const auto& p : event.posts) {
    if (!p.sentiment) continue;
    out.push_back({anonymizer.anonymize(to_string(Platform::synthetic), p.post_id), *p.sentiment, "gold",
                   prompt_hash(kDefaultSentimentPrompt)});
  }
  return out;
}

std::vector<Sentiment> generate_label_noise(std::span<const Sentiment> gold, double alpha, std::uint64_t seed) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("generate_label_noise: alpha outside [0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Sentiment> out(gold.begin(), gold.end());
  for (auto& s : out) {
    if (!(u(rng) < alpha)) continue;
    std::array<Sentiment, 2> others{};
    std::size_t k = 0;
    for (Sentiment c : kAllSentiments)
      if (c != s) others[k++] = c;
    s = others[u(rng) < 0.5 ? 0 : 1];
  }
  return out;
}

NoiseSimulation simulate_bin_mean_noise(std::size_t c_t, double alpha, std::size_t trials, std::uint64_t seed) {
  if (c_t == 0 || trials < 2) throw std::invalid_argument("simulate_bin_mean_noise: need c_t >= 1 and trials >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> cls(0, 2);
  std::vector<double> errors(trials);
  std::vector<Sentiment> gold(c_t);
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& g : gold) g = kAllSentiments[cls(rng)];
    const auto noisy = generate_label_noise(gold, alpha, rng());
    double diff = 0.0;
    for (std::size_t i = 0; i < c_t; ++i) diff += score(noisy[i]) - score(gold[i]);
    errors[t] = diff / static_cast<double>(c_t);
  }
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= static_cast<double>(trials);
  double ss = 0.0;
  for (double e : errors) ss += (e - mean) * (e - mean);
  NoiseSimulation sim;
  sim.trials = trials;
  sim.empirical_std = std::sqrt(ss / static_cast<double>(trials - 1));
  sim.standard_error = sim.empirical_std / std::sqrt(2.0 * static_cast<double>(trials - 1));
  return sim;
}

EventSeries random_walk_series(const RandomWalkSpec& spec) {
  if (spec.n_bins < kMinBins) throw std::invalid_argument("random_walk_series: too few bins");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> step(0.0, 1.0);
  std::bernoulli_distribution spike(spec.spike_prob);

  EventSeries s;
  s.event_id = spec.event_id;
  s.category = spec.category;
  s.granularity = spec.granularity;
  const auto splits = chronological_split(spec.n_bins);
  const std::int64_t width = width_seconds(spec.granularity);
  const std::int64_t start = assign_bin(spec.start_utc, spec.granularity);
  double level = spec.start_level;
  double mood = 0.0;
  for (std::size_t i = 0; i < spec.n_bins; ++i) {
    level = std::max(5.0, level + spec.step_sd * step(rng));
    mood = std::clamp(mood + 0.05 * step(rng), -0.8, 0.8);
    double c = level;
    double m = mood;
    if (spike(rng)) {
      c += spec.spike_scale * spec.step_sd * std::abs(step(rng));
      m = std::clamp(m + (step(rng) < 0.0 ? -0.4 : 0.4), -1.0, 1.0);
    }
    Bin b;
    b.bin_start_utc = start + static_cast<std::int64_t>(i) * width;
    b.count = std::max<std::int64_t>(1, std::llround(c));
    b.sentiment = m;
    b.split = splits[i];
    s.bins.push_back(b);
  }
  impute_split_local(s);
  zscore_normalize(s);
  return s;
}

}  // namespace eventcast
