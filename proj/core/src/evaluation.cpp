#include "eventcast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <spdlog/spdlog.h>

#include "eventcast/io.hpp"

namespace eventcast {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("metric: length mismatch");
  if (pred.empty()) throw std::invalid_argument("metric: empty input");
}

struct WindowSets {
  std::vector<ForecastWindow> train;
  std::vector<ForecastWindow> val;
  std::vector<ForecastWindow> test;
};

void append_windows(WindowSets& sets, const EventSeries& s, Target target, bool use_train, bool use_test) {
  const auto shape = window_shape(s.granularity);
  for (auto& w : make_windows(s, target, shape.lookback, shape.horizon)) {
    switch (w.split) {
      case Split::train:
        if (use_train) sets.train.push_back(std::move(w));
        break;
      case Split::val:
        if (use_train) sets.val.push_back(std::move(w));
        break;
      case Split::test:
        if (use_test) sets.test.push_back(std::move(w));
        break;
    }
  }
}

struct SeedOutcome {
  double mae = 0.0;
  double mse = 0.0;
  std::vector<double> window_mae;
  std::vector<double> window_mse;
  std::map<BinRef, double> per_bin;
  std::size_t epochs = 0;
};

SeedOutcome evaluate_seed(ModelKind kind, std::uint64_t seed, const WindowSets& sets, const TrainConfig& config) {
  const TrainedModel model = train(kind, sets.train, sets.val, config, seed);
  SeedOutcome out;
  out.epochs = model.train_log.size();
  BinErrorMap bins;
  for (const auto& w : sets.test) {
    const auto pred = model.forecast(w.lookback, w.horizon.size());
    const double a = mae(pred, w.horizon);
    const double s = mse(pred, w.horizon);
    if (s < a * a * (1.0 - 1e-12))
      throw std::logic_error("MSE < MAE^2 on window " + w.event_id + ":" + std::to_string(w.start));
    out.window_mae.push_back(a);
    out.window_mse.push_back(s);
    bins.add_window(w, pred);
  }
  const auto n = static_cast<double>(out.window_mae.size());
  for (std::size_t i = 0; i < out.window_mae.size(); ++i) {
    out.mae += out.window_mae[i] / n;
    out.mse += out.window_mse[i] / n;
  }
  out.per_bin = bins.means();
  return out;
}

struct Cell {
  std::string held_out;
  Granularity granularity = Granularity::day;
  Target target = Target::intensity;
  WindowSets sets;
};

std::string format_k(const std::optional<double>& k) { return k ? format_double(*k) : std::string(); }

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

double mse(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    sum += e * e;
  }
  return sum / static_cast<double>(pred.size());
}

void BinErrorMap::add(const BinRef& bin, double abs_error) {
  auto& slot = sums_[bin];
  slot.first += abs_error;
  slot.second += 1;
}

void BinErrorMap::add_window(const ForecastWindow& window, std::span<const double> pred) {
  if (pred.size() != window.horizon.size()) throw std::invalid_argument("add_window: length mismatch");
  for (std::size_t h = 0; h < pred.size(); ++h)
    add(BinRef{window.event_id, window.horizon_bin_indices[h]}, std::abs(pred[h] - window.horizon[h]));
}

std::map<BinRef, double> BinErrorMap::means() const {
  std::map<BinRef, double> out;
  for (const auto& [bin, acc] : sums_) out.emplace(bin, acc.first / static_cast<double>(acc.second));
  return out;
}

std::optional<double> mae_reply(const std::map<BinRef, double>& per_bin, std::span<const BinRef> subset) {
  if (subset.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& b : subset) {
    const auto it = per_bin.find(b);
    if (it == per_bin.end())
      throw std::invalid_argument("mae_reply: no error for bin " + b.event_id + "#" + std::to_string(b.bin_index));
    sum += it->second;
  }
  return sum / static_cast<double>(subset.size());
}

double per_bin_mae(const std::map<BinRef, double>& per_bin) {
  if (per_bin.empty()) throw std::invalid_argument("per_bin_mae: no bins");
  double sum = 0.0;
  for (const auto& [bin, e] : per_bin) sum += e;
  return sum / static_cast<double>(per_bin.size());
}

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::within_event: return "within_event";
    case Protocol::text_augmented: return "text_augmented";
    case Protocol::structure_aware: return "structure_aware";
    case Protocol::loco: return "loco";
  }
  return "?";
}

Protocol parse_protocol(std::string_view s) {
  for (Protocol p : {Protocol::within_event, Protocol::text_augmented, Protocol::structure_aware, Protocol::loco})
    if (to_string(p) == s) return p;
  throw ParseError("unknown protocol: " + std::string(s));
}

std::string_view to_string(TextConfig t) {
  switch (t) {
    case TextConfig::none: return "none";
    case TextConfig::flat: return "flat";
    case TextConfig::structured: return "structured";
    case TextConfig::not_applicable: return "n/a";
  }
  return "?";
}

TextConfig parse_text_config(std::string_view s) {
  for (TextConfig t : {TextConfig::none, TextConfig::flat, TextConfig::structured, TextConfig::not_applicable})
    if (to_string(t) == s) return t;
  throw ParseError("unknown text config: " + std::string(s));
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::mae: return "MAE";
    case Metric::mse: return "MSE";
    case Metric::mae_reply: return "MAE_reply";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  for (Metric m : {Metric::mae, Metric::mse, Metric::mae_reply})
    if (to_string(m) == s) return m;
  throw ParseError("unknown metric: " + std::string(s));
}

SeedStats seed_stats(std::span<const double> values) {
  SeedStats st;
  if (values.empty()) return st;
  // Deviations are taken from the first value.
  const double ref = values.front();
  const auto n = static_cast<double>(values.size());
  double d_sum = 0.0;
  for (double v : values) d_sum += v - ref;
  const double d_mean = d_sum / n;
  st.mean = ref + d_mean;
  double ss = 0.0;
  for (double v : values) {
    const double d = (v - ref) - d_mean;
    ss += d * d;
  }
  st.std = std::sqrt(ss / n);
  return st;
}

std::string report_to_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    out << csv_escape(r.model) << ',' << csv_escape(r.target) << ',' << csv_escape(r.granularity) << ','
        << csv_escape(r.protocol) << ',' << csv_escape(r.held_out) << ',' << csv_escape(r.text_config) << ','
        << csv_escape(r.metric) << ',' << format_k(r.k) << ',' << format_double(r.mean) << ','
        << format_double(r.std) << ',' << r.n_seeds << '\n';
  }
  return out.str();
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string() + ": empty report");
  const auto header = split_csv_line(lines.front());
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"model", "target", "granularity", "protocol", "text_config", "metric", "k", "mean",
                               "std", "n_seeds"})
    if (col.count(required) == 0) throw ParseError(path.string() + ": missing column " + required);

  std::vector<ReportRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() != header.size()) throw ParseError(path.string() + ": ragged row " + std::to_string(i + 1));
    ReportRow r;
    r.model = f[col["model"]];
    r.target = f[col["target"]];
    r.granularity = f[col["granularity"]];
    r.protocol = f[col["protocol"]];
    if (col.count("held_out") != 0) r.held_out = f[col["held_out"]];
    r.text_config = f[col["text_config"]];
    r.metric = f[col["metric"]];
    if (!f[col["k"]].empty()) r.k = parse_double(f[col["k"]]);
    r.mean = parse_double(f[col["mean"]]);
    r.std = parse_double(f[col["std"]]);
    r.n_seeds = static_cast<std::size_t>(std::stoull(f[col["n_seeds"]]));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReportRow> merge_reports(std::vector<ReportRow> base, std::span<const ReportRow> extra) {
  auto key = [](const ReportRow& r) {
    return std::make_tuple(r.model, r.target, r.granularity, r.protocol, r.held_out, r.text_config, r.metric,
                           format_k(r.k));
  };
  std::set<decltype(key(base.front()))> seen;
  for (const auto& r : base) seen.insert(key(r));
  for (const auto& r : extra) {
    if (!seen.insert(key(r)).second)
      throw std::invalid_argument("merge_reports: duplicate row for model " + r.model + " metric " + r.metric);
    base.push_back(r);
  }
  return base;
}

EvalResult run_protocol(const EvalData& data, const EvalOptions& options) {
  if (options.seeds.empty()) throw std::invalid_argument("run_protocol: no seeds");
  if (options.models.empty()) throw std::invalid_argument("run_protocol: no models");

  std::vector<Granularity> grans = options.granularities;
  std::vector<Target> targets = options.targets;
  if (options.protocol == Protocol::structure_aware) {
    grans = {Granularity::day};
    targets = {Target::polarity};
  }
  for (Granularity g : grans)
    if (data.series.count(g) == 0) throw MissingArtifact(std::filesystem::path("series") / std::string(to_string(g)));
  if (options.protocol == Protocol::text_augmented)
    for (Granularity g : grans) {
      const auto it = data.views_available.find(g);
      if (it == data.views_available.end() || !it->second)
        throw MissingArtifact(std::filesystem::path("views") / std::string(to_string(g)));
    }
  if (options.protocol == Protocol::structure_aware)
    for (double k : options.k_percents)
      if (!(k > 0.0 && k <= 100.0)) throw std::invalid_argument("k outside (0, 100]");

  // Cells: one per (held-out category, granularity, target).
  std::vector<Cell> cells;
  for (Granularity g : grans) {
    const auto& all = data.series.at(g);
    std::vector<std::optional<Category>> held;
    if (options.protocol == Protocol::loco) {
      std::set<Category> present;
      for (const auto& s : all) present.insert(s.category);
      if (present.size() < 2)
        throw std::invalid_argument("loco needs at least two categories at " + std::string(to_string(g)));
      for (Category c : present) held.emplace_back(c);
    } else {
      held.emplace_back(std::nullopt);
    }
    for (const auto& h : held)
      for (Target t : targets) {
        Cell cell;
        cell.granularity = g;
        cell.target = t;
        if (h) cell.held_out = std::string(to_string(*h));
        for (const auto& s : all) {
          const bool is_held = h && s.category == *h;
          append_windows(cell.sets, s, t, !h || !is_held, !h || is_held);
        }
        cells.push_back(std::move(cell));
      }
  }

  const bool learned = std::any_of(options.models.begin(), options.models.end(),
                                   [](ModelKind k) { return !is_deterministic(k); });
  for (const auto& cell : cells)
    if (learned && cell.sets.val.empty() && !cell.sets.train.empty())
      spdlog::warn("{} {} {}: no validation windows, early stopping on training MSE", to_string(cell.granularity),
                   to_string(cell.target), cell.held_out);

  struct Job {
    std::size_t cell;
    std::size_t model;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].sets.test.empty() || cells[c].sets.train.empty()) continue;
    for (std::size_t m = 0; m < options.models.size(); ++m)
      for (std::size_t s = 0; s < options.seeds.size(); ++s) jobs.push_back({c, m, s});
  }
  std::vector<SeedOutcome> outcomes(jobs.size());
  parallel_for(jobs.size(), options.jobs, [&](std::size_t i) {
    const auto& j = jobs[i];
    outcomes[i] = evaluate_seed(options.models[j.model], options.seeds[j.seed], cells[j.cell].sets, options.train);
  });

  EvalResult result;
  result.audit = {{"protocol", to_string(options.protocol)}, {"seeds", options.seeds}, {"cells", nlohmann::json::array()}};
  std::vector<TextConfig> configs{TextConfig::not_applicable};
  if (options.protocol == Protocol::text_augmented)
    configs = {TextConfig::none, TextConfig::flat, TextConfig::structured};

  std::size_t cursor = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    nlohmann::json cell_audit{{"granularity", to_string(cell.granularity)},
                              {"target", to_string(cell.target)},
                              {"held_out", cell.held_out},
                              {"train_windows", cell.sets.train.size()},
                              {"val_windows", cell.sets.val.size()},
                              {"test_windows", cell.sets.test.size()},
                              {"models", nlohmann::json::array()}};
    if (cell.sets.test.empty() || cell.sets.train.empty()) {
      spdlog::warn("{} {} {}: no train or test windows, skipped", to_string(cell.granularity),
                   to_string(cell.target), cell.held_out);
      cell_audit["skipped"] = true;
      result.audit["cells"].push_back(std::move(cell_audit));
      continue;
    }
    for (std::size_t m = 0; m < options.models.size(); ++m) {
      std::vector<const SeedOutcome*> per_seed;
      for (std::size_t s = 0; s < options.seeds.size(); ++s) per_seed.push_back(&outcomes[cursor++]);
      const std::string model_name(to_string(options.models[m]));

      auto base_row = [&](Metric metric, std::optional<double> k, std::span<const double> values, TextConfig tc) {
        const auto st = seed_stats(values);
        ReportRow r;
        r.model = model_name;
        r.target = std::string(to_string(cell.target));
        r.granularity = std::string(to_string(cell.granularity));
        r.protocol = std::string(to_string(options.protocol));
        r.held_out = cell.held_out;
        r.text_config = std::string(to_string(tc));
        r.metric = std::string(to_string(metric));
        r.k = k;
        r.mean = st.mean;
        r.std = st.std;
        r.n_seeds = values.size();
        return r;
      };

      nlohmann::json model_audit{{"model", model_name}, {"seeds", nlohmann::json::array()}};
      for (std::size_t s = 0; s < per_seed.size(); ++s) {
        nlohmann::json sa{{"seed", options.seeds[s]}, {"mae", per_seed[s]->mae}, {"mse", per_seed[s]->mse},
                          {"epochs", per_seed[s]->epochs}};
        if (options.audit_windows) {
          sa["window_mae"] = per_seed[s]->window_mae;
          sa["window_mse"] = per_seed[s]->window_mse;
        }
        model_audit["seeds"].push_back(std::move(sa));
      }

      if (options.protocol == Protocol::structure_aware) {
        // Pool only test bins that some evaluated window covers.
        std::vector<ScoredBin> pooled;
        const auto& covered = per_seed.front()->per_bin;
        for (const auto& s : data.series.at(cell.granularity))
          for (std::size_t i = 0; i < s.bins.size(); ++i)
            if (s.bins[i].split == Split::test && s.bins[i].reply_ratio && covered.count(BinRef{s.event_id, i}) != 0)
              pooled.push_back({BinRef{s.event_id, i}, *s.bins[i].reply_ratio});
        nlohmann::json subsets = nlohmann::json::object();
        for (double k : options.k_percents) {
          const auto subset = high_interaction_subset(pooled, k);
          std::vector<double> values;
          for (const auto* o : per_seed) {
            const auto v = mae_reply(o->per_bin, subset);
            if (v) values.push_back(*v);
          }
          subsets[format_double(k)] = subset.size();
          if (values.size() == per_seed.size())
            result.rows.push_back(base_row(Metric::mae_reply, k, values, TextConfig::not_applicable));
        }
        model_audit["pooled_test_bins"] = pooled.size();
        model_audit["subset_sizes"] = std::move(subsets);
      } else {
        std::vector<double> maes;
        std::vector<double> mses;
        for (const auto* o : per_seed) {
          maes.push_back(o->mae);
          mses.push_back(o->mse);
        }
        for (TextConfig tc : configs) {
          result.rows.push_back(base_row(Metric::mae, std::nullopt, maes, tc));
          result.rows.push_back(base_row(Metric::mse, std::nullopt, mses, tc));
        }
      }
      cell_audit["models"].push_back(std::move(model_audit));
    }
    result.audit["cells"].push_back(std::move(cell_audit));
  }
  return result;
}

}  // namespace eventcast
