#include "eventcast/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace eventcast {

namespace {

void check_shapes(const DLinearParams& p) {
  const std::size_t w = p.horizon * p.lookback;
  if (p.w_trend.size() != w || p.w_resid.size() != w || p.b_trend.size() != p.horizon ||
      p.b_resid.size() != p.horizon)
    throw std::invalid_argument("DLinear parameter shapes are inconsistent");
}

double mean_loss(const DLinearParams& params, std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  return dlinear_loss(params, samples);
}

}  // namespace

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::last_value: return "LastValue";
    case ModelKind::moving_average: return "MovingAverage";
    case ModelKind::dlinear: return "DLinear";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "LastValue" || s == "last_value") return ModelKind::last_value;
  if (s == "MovingAverage" || s == "moving_average") return ModelKind::moving_average;
  if (s == "DLinear" || s == "dlinear") return ModelKind::dlinear;
  throw ParseError("unknown model: " + std::string(s));
}

std::vector<double> last_value_forecast(std::span<const double> lookback, std::size_t horizon) {
  if (lookback.empty()) throw std::invalid_argument("last_value_forecast: empty lookback");
  return std::vector<double>(horizon, lookback.back());
}

std::vector<double> moving_average_forecast(std::span<const double> lookback, std::size_t window,
                                            std::size_t horizon) {
  if (lookback.empty()) throw std::invalid_argument("moving_average_forecast: empty lookback");
  const std::size_t w = std::clamp<std::size_t>(window, 1, lookback.size());
  double sum = 0.0;
  for (std::size_t i = lookback.size() - w; i < lookback.size(); ++i) sum += lookback[i];
  return std::vector<double>(horizon, sum / static_cast<double>(w));
}

std::size_t dlinear_kernel(std::size_t lookback) {
  return std::min<std::size_t>(25, std::max<std::size_t>(3, 2 * (lookback / 2) + 1));
}

std::vector<double> moving_average_trend(std::span<const double> x, std::size_t kernel) {
  if (kernel % 2 == 0) throw std::invalid_argument("moving_average_trend: kernel must be odd");
  const std::size_t n = x.size();
  std::vector<double> out(n);
  if (n == 0) return out;
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::ptrdiff_t d = -half; d <= half; ++d) {
      const auto j = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) + d, 0,
                                                static_cast<std::ptrdiff_t>(n) - 1);
      sum += x[static_cast<std::size_t>(j)];
    }
    out[i] = sum / static_cast<double>(kernel);
  }
  return out;
}

DLinearParams DLinearParams::zeros(std::size_t lookback, std::size_t horizon) {
  if (lookback == 0 || horizon == 0) throw std::invalid_argument("DLinear needs L >= 1 and H >= 1");
  DLinearParams p;
  p.lookback = lookback;
  p.horizon = horizon;
  p.kernel = dlinear_kernel(lookback);
  p.w_trend.assign(horizon * lookback, 0.0);
  p.w_resid.assign(horizon * lookback, 0.0);
  p.b_trend.assign(horizon, 0.0);
  p.b_resid.assign(horizon, 0.0);
  return p;
}

DLinearParams DLinearParams::random(std::size_t lookback, std::size_t horizon, std::uint64_t seed) {
  DLinearParams p = zeros(lookback, horizon);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(lookback));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto* v : {&p.w_trend, &p.b_trend, &p.w_resid, &p.b_resid})
    for (auto& x : *v) x = dist(rng);
  return p;
}

std::vector<double> DLinearParams::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  for (const auto* v : {&w_trend, &b_trend, &w_resid, &b_resid}) out.insert(out.end(), v->begin(), v->end());
  return out;
}

void DLinearParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw std::invalid_argument("DLinearParams::assign: size mismatch");
  auto it = flat.begin();
  for (auto* v : {&w_trend, &b_trend, &w_resid, &b_resid}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(v->size()), v->begin());
    it += static_cast<std::ptrdiff_t>(v->size());
  }
}

Decomposed decompose(std::span<const double> lookback, std::size_t kernel) {
  Decomposed d;
  d.trend = moving_average_trend(lookback, kernel);
  d.resid.resize(lookback.size());
  for (std::size_t i = 0; i < lookback.size(); ++i) d.resid[i] = lookback[i] - d.trend[i];
  return d;
}

std::vector<double> dlinear_forecast(const Decomposed& input, const DLinearParams& p) {
  check_shapes(p);
  if (input.trend.size() != p.lookback || input.resid.size() != p.lookback)
    throw std::invalid_argument("dlinear_forecast: lookback length does not match the parameters");
  std::vector<double> y(p.horizon);
  for (std::size_t h = 0; h < p.horizon; ++h) {
    double acc = p.b_trend[h] + p.b_resid[h];
    const double* wt = &p.w_trend[h * p.lookback];
    const double* wr = &p.w_resid[h * p.lookback];
    for (std::size_t l = 0; l < p.lookback; ++l) acc += wt[l] * input.trend[l] + wr[l] * input.resid[l];
    y[h] = acc;
  }
  return y;
}

std::vector<double> dlinear_forecast(std::span<const double> lookback, const DLinearParams& params) {
  return dlinear_forecast(decompose(lookback, params.kernel), params);
}

std::vector<Sample> make_samples(std::span<const ForecastWindow> windows, std::size_t kernel) {
  std::vector<Sample> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back({decompose(w.lookback, kernel), w.horizon});
  return out;
}

double dlinear_loss(const DLinearParams& params, std::span<const Sample> batch) {
  if (batch.empty()) throw std::invalid_argument("dlinear_loss: empty batch");
  double sum = 0.0;
  for (const auto& s : batch) {
    if (s.target.size() != params.horizon) throw std::invalid_argument("dlinear_loss: target length mismatch");
    const auto y = dlinear_forecast(s.input, params);
    for (std::size_t h = 0; h < params.horizon; ++h) {
      const double e = y[h] - s.target[h];
      sum += e * e;
    }
  }
  return sum / static_cast<double>(batch.size() * params.horizon);
}

namespace {

template <class Get>
std::vector<double> gradient_over(const DLinearParams& params, std::size_t n, Get get) {
  if (n == 0) throw std::invalid_argument("dlinear_gradient: empty batch");
  const std::size_t L = params.lookback;
  const std::size_t H = params.horizon;
  const std::size_t wsize = H * L;
  // flatten() layout: w_trend, b_trend, w_resid, b_resid
  std::vector<double> g(params.size(), 0.0);
  double* gwt = g.data();
  double* gbt = gwt + wsize;
  double* gwr = gbt + H;
  double* gbr = gwr + wsize;
  const double scale = 2.0 / static_cast<double>(n * H);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = get(i);
    const auto y = dlinear_forecast(s.input, params);
    for (std::size_t h = 0; h < H; ++h) {
      const double d = scale * (y[h] - s.target[h]);
      gbt[h] += d;
      gbr[h] += d;
      for (std::size_t l = 0; l < L; ++l) {
        gwt[h * L + l] += d * s.input.trend[l];
        gwr[h * L + l] += d * s.input.resid[l];
      }
    }
  }
  return g;
}

}  // namespace

std::vector<double> dlinear_gradient(const DLinearParams& params, std::span<const Sample> batch) {
  return gradient_over(params, batch.size(), [&](std::size_t i) -> const Sample& { return batch[i]; });
}

std::vector<double> TrainedModel::forecast(std::span<const double> lookback, std::size_t horizon) const {
  switch (kind) {
    case ModelKind::last_value: return last_value_forecast(lookback, horizon);
    case ModelKind::moving_average: return moving_average_forecast(lookback, kMovingAverageWindow, horizon);
    case ModelKind::dlinear:
      if (!params) throw std::logic_error("DLinear model has no parameters");
      if (params->horizon != horizon) throw std::invalid_argument("DLinear horizon mismatch");
      return dlinear_forecast(lookback, *params);
  }
  return {};
}

TrainedModel train(ModelKind kind, std::span<const ForecastWindow> train_windows,
                   std::span<const ForecastWindow> val_windows, const TrainConfig& config, std::uint64_t seed) {
  TrainedModel model;
  model.kind = kind;
  model.seed = seed;
  if (kind != ModelKind::dlinear) return model;
  if (train_windows.empty()) throw std::invalid_argument("train: no training windows");

  const std::size_t L = train_windows.front().lookback.size();
  const std::size_t H = train_windows.front().horizon.size();
  for (const auto* set : {&train_windows, &val_windows})
    for (const auto& w : *set)
      if (w.lookback.size() != L || w.horizon.size() != H) throw std::invalid_argument("train: inconsistent window shapes");

  DLinearParams params = DLinearParams::random(L, H, seed);
  const auto train_samples = make_samples(train_windows, params.kernel);
  const auto val_samples = make_samples(val_windows, params.kernel);
  model.stopped_on_train_loss = val_samples.empty();
  if (model.stopped_on_train_loss)
    spdlog::debug("seed {}: no validation windows, early stopping on training MSE", seed);

  std::vector<double> theta = params.flatten();
  std::vector<double> m(theta.size(), 0.0);
  std::vector<double> v(theta.size(), 0.0);
  std::size_t step = 0;
  std::vector<std::size_t> order(train_samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_theta = theta;
  std::size_t since_best = 0;
  const std::size_t bs = std::max<std::size_t>(1, config.batch_size);

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(order.size(), start + bs) - start;
      params.assign(theta);
      const auto g = gradient_over(params, n, [&](std::size_t i) -> const Sample& { return train_samples[order[start + i]]; });
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < theta.size(); ++k) {
        m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
        v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
        theta[k] -= config.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config.epsilon);
      }
    }
    params.assign(theta);
    const double metric = mean_loss(params, model.stopped_on_train_loss ? train_samples : val_samples);
    model.train_log.push_back(metric);
    if (metric < best) {
      best = metric;
      best_theta = theta;
      model.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  params.assign(best_theta);
  model.params = std::move(params);
  return model;
}

nlohmann::json checkpoint_to_json(const TrainedModel& model) {
  nlohmann::json j{{"kind", to_string(model.kind)}, {"seed", model.seed}, {"train_log", model.train_log},
                   {"best_epoch", model.best_epoch}};
  if (model.params) {
    const auto& p = *model.params;
    j["L"] = p.lookback;
    j["H"] = p.horizon;
    j["kernel"] = p.kernel;
    std::vector<double> weights = p.w_trend;
    weights.insert(weights.end(), p.w_resid.begin(), p.w_resid.end());
    std::vector<double> biases = p.b_trend;
    biases.insert(biases.end(), p.b_resid.begin(), p.b_resid.end());
    j["weights"] = weights;
    j["biases"] = biases;
  } else {
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
  }
  return j;
}

TrainedModel checkpoint_from_json(const nlohmann::json& j) {
  TrainedModel model;
  try {
    model.kind = parse_model_kind(j.at("kind").get<std::string>());
    model.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("train_log")) model.train_log = j.at("train_log").get<std::vector<double>>();
    if (j.contains("best_epoch")) model.best_epoch = j.at("best_epoch").get<std::size_t>();
    if (model.kind == ModelKind::dlinear) {
      auto p = DLinearParams::zeros(j.at("L").get<std::size_t>(), j.at("H").get<std::size_t>());
      const auto weights = j.at("weights").get<std::vector<double>>();
      const auto biases = j.at("biases").get<std::vector<double>>();
      const std::size_t w = p.w_trend.size();
      if (weights.size() != 2 * w || biases.size() != 2 * p.horizon) throw ParseError("checkpoint: bad parameter sizes");
      std::copy(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(w), p.w_trend.begin());
      std::copy(weights.begin() + static_cast<std::ptrdiff_t>(w), weights.end(), p.w_resid.begin());
      std::copy(biases.begin(), biases.begin() + static_cast<std::ptrdiff_t>(p.horizon), p.b_trend.begin());
      std::copy(biases.begin() + static_cast<std::ptrdiff_t>(p.horizon), biases.end(), p.b_resid.begin());
      model.params = std::move(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  return model;
}

}  // namespace eventcast
