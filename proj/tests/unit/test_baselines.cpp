#include <doctest.h>

#include <cmath>
#include <random>

#include "eventcast/baselines.hpp"
#include "eventcast/synth.hpp"

using namespace eventcast;

namespace {

// Centered average with the ends repeated, written out index by index.
std::vector<double> padded_average(const std::vector<double>& x, std::size_t k) {
  const auto n = static_cast<long>(x.size());
  const long half = static_cast<long>(k / 2);
  std::vector<double> out;
  for (long i = 0; i < n; ++i) {
    double s = 0.0;
    for (long j = i - half; j <= i + half; ++j) s += x[static_cast<std::size_t>(std::clamp(j, 0L, n - 1))];
    out.push_back(s / static_cast<double>(k));
  }
  return out;
}

std::vector<double> reference_forecast(const std::vector<double>& x, const DLinearParams& p) {
  const auto trend = padded_average(x, p.kernel);
  std::vector<double> y(p.horizon);
  for (std::size_t h = 0; h < p.horizon; ++h) {
    double v = p.b_trend[h] + p.b_resid[h];
    for (std::size_t l = 0; l < p.lookback; ++l)
      v += p.w_trend[h * p.lookback + l] * trend[l] + p.w_resid[h * p.lookback + l] * (x[l] - trend[l]);
    y[h] = v;
  }
  return y;
}

std::vector<ForecastWindow> walk_windows(std::uint64_t seed, std::size_t n_events, std::size_t n_bins, Split split) {
  std::vector<ForecastWindow> out;
  for (std::size_t e = 0; e < n_events; ++e) {
    RandomWalkSpec spec;
    spec.event_id = "w" + std::to_string(e);
    spec.n_bins = n_bins;
    spec.seed = seed + e;
    const auto s = random_walk_series(spec);
    for (auto& w : make_windows(s, Target::intensity, 14, 7))
      if (w.split == split) out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

TEST_CASE("naive forecasts") {
  const std::vector<double> x = {1, 2, 3};
  CHECK(last_value_forecast(x, 2) == std::vector<double>{3, 3});
  const std::vector<double> c(10, 2.5);
  CHECK(last_value_forecast(c, 4) == std::vector<double>(4, 2.5));
  CHECK(moving_average_forecast(c, 7, 3) == std::vector<double>(3, 2.5));
  const std::vector<double> tail = {0.1, 0.2, 3.7};
  CHECK(last_value_forecast(tail, 7) == std::vector<double>(7, 3.7));
  const std::vector<double> seven = {1, 2, 3, 4, 5, 6, 7};
  CHECK(moving_average_forecast(seven, 7, 3) == std::vector<double>{4, 4, 4});
  CHECK(moving_average_forecast(x, 7, 2) == std::vector<double>{2, 2});
  const std::vector<double> nine = {100, 100, 1, 2, 3, 4, 5, 6, 7};
  CHECK(moving_average_forecast(nine, 7, 1) == std::vector<double>{4});
  CHECK_THROWS_AS(last_value_forecast(std::vector<double>{}, 2), std::invalid_argument);
}

TEST_CASE("kernel size") {
  CHECK(dlinear_kernel(14) == 15);
  CHECK(dlinear_kernel(30) == 25);
  CHECK(dlinear_kernel(1) == 3);
  CHECK(dlinear_kernel(28) == 25);
  CHECK(dlinear_kernel(56) == 25);
  CHECK(dlinear_kernel(5) == 5);
}

TEST_CASE("moving_average_trend") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(1 + rng() % 40);
    for (auto& v : x) v = z(rng);
    const auto k = dlinear_kernel(x.size());
    const auto got = moving_average_trend(x, k);
    const auto want = padded_average(x, k);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    // Shifting the input shifts the trend by the same amount.
    auto shifted = x;
    for (auto& v : shifted) v += 3.25;
    const auto moved = moving_average_trend(shifted, k);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(moved[i] == doctest::Approx(got[i] + 3.25).epsilon(1e-12));
  }
}

TEST_CASE("dlinear forward") {
  const auto zeros = DLinearParams::zeros(14, 7);
  CHECK(dlinear_forecast(std::vector<double>(14, 0.0), zeros) == std::vector<double>(7, 0.0));

  auto bias_only = DLinearParams::zeros(14, 7);
  for (std::size_t h = 0; h < 7; ++h) {
    bias_only.b_trend[h] = static_cast<double>(h);
    bias_only.b_resid[h] = 0.5;
  }
  std::vector<double> x(14);
  for (std::size_t i = 0; i < 14; ++i) x[i] = std::sin(static_cast<double>(i));
  const auto y = dlinear_forecast(x, bias_only);
  for (std::size_t h = 0; h < 7; ++h) CHECK(y[h] == static_cast<double>(h) + 0.5);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = DLinearParams::random(14, 7, seed);
    const double bound = 1.0 / std::sqrt(14.0);
    for (double w : p.flatten()) CHECK(std::abs(w) <= bound);
    const auto got = dlinear_forecast(x, p);
    const auto want = reference_forecast(x, p);
    for (std::size_t h = 0; h < 7; ++h) CHECK(got[h] == doctest::Approx(want[h]).epsilon(1e-12));
  }
  auto p = DLinearParams::random(3, 2, 9);
  auto flat = p.flatten();
  CHECK(flat.size() == p.size());
  DLinearParams q = DLinearParams::zeros(3, 2);
  q.assign(flat);
  CHECK(q.flatten() == flat);
}

TEST_CASE("dlinear gradient matches central differences") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z;
  for (int draw = 0; draw < 20; ++draw) {
    const std::size_t L = 2 + rng() % 14;
    const std::size_t H = 1 + rng() % 5;
    auto params = DLinearParams::random(L, H, rng());
    std::vector<Sample> batch;
    for (int b = 0; b < 4; ++b) {
      std::vector<double> x(L);
      for (auto& v : x) v = z(rng);
      std::vector<double> y(H);
      for (auto& v : y) v = z(rng);
      batch.push_back({decompose(x, params.kernel), y});
    }
    const auto g = dlinear_gradient(params, batch);
    auto theta = params.flatten();
    const double h = 1e-5;
    double diff = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      auto plus = theta, minus = theta;
      plus[k] += h;
      minus[k] -= h;
      DLinearParams a = params, b = params;
      a.assign(plus);
      b.assign(minus);
      const double numeric = (dlinear_loss(a, batch) - dlinear_loss(b, batch)) / (2 * h);
      diff += (numeric - g[k]) * (numeric - g[k]);
      norm += std::max(numeric * numeric, g[k] * g[k]);
    }
    CHECK(std::sqrt(diff / norm) <= 1e-4);
  }
}

TEST_CASE("training") {
  const auto tr = walk_windows(100, 6, 150, Split::train);
  const auto va = walk_windows(100, 6, 150, Split::val);
  REQUIRE_FALSE(tr.empty());
  REQUIRE_FALSE(va.empty());

  const auto naive = train(ModelKind::last_value, tr, va, {}, 0);
  CHECK_FALSE(naive.params.has_value());
  CHECK(naive.train_log.empty());
  CHECK(naive.forecast(tr[0].lookback, 7) == last_value_forecast(tr[0].lookback, 7));

  TrainConfig quick;
  quick.max_epochs = 15;
  const auto a = train(ModelKind::dlinear, tr, va, quick, 3);
  const auto b = train(ModelKind::dlinear, tr, va, quick, 3);
  REQUIRE(a.params);
  CHECK(a.params->flatten() == b.params->flatten());
  CHECK(a.train_log == b.train_log);
  CHECK_FALSE(a.stopped_on_train_loss);
  // The kept checkpoint is the best epoch seen.
  CHECK(a.train_log[a.best_epoch] == *std::min_element(a.train_log.begin(), a.train_log.end()));
  const auto c = train(ModelKind::dlinear, tr, va, quick, 4);
  CHECK(c.params->flatten() != a.params->flatten());

  const auto no_val = train(ModelKind::dlinear, tr, {}, quick, 3);
  CHECK(no_val.stopped_on_train_loss);

  CHECK_THROWS_AS(train(ModelKind::dlinear, {}, va, quick, 0), std::invalid_argument);
  auto bad = va;
  bad[0].horizon.pop_back();
  CHECK_THROWS_AS(train(ModelKind::dlinear, tr, bad, quick, 0), std::invalid_argument);

  const auto restored = checkpoint_from_json(checkpoint_to_json(a));
  CHECK(restored.params->flatten() == a.params->flatten());
  CHECK(restored.best_epoch == a.best_epoch);
  CHECK(restored.forecast(tr[5].lookback, 7) == a.forecast(tr[5].lookback, 7));
  const auto j = checkpoint_to_json(a);
  CHECK(j.at("weights").size() == 2 * 14 * 7);
  CHECK(j.at("biases").size() == 2 * 7);
}
