#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "eventcast/series.hpp"

namespace eventcast {

enum class ModelKind { last_value, moving_average, dlinear };

inline constexpr ModelKind kAllModels[] = {ModelKind::last_value, ModelKind::moving_average, ModelKind::dlinear};

std::string_view to_string(ModelKind k);  // "LastValue", "MovingAverage", "DLinear"
ModelKind parse_model_kind(std::string_view s);
inline bool is_deterministic(ModelKind k) { return k != ModelKind::dlinear; }

/// H copies of the final lookback value. Throws std::invalid_argument on empty input.
std::vector<double> last_value_forecast(std::span<const double> lookback, std::size_t horizon);

/// H copies of the mean of the trailing min(window, L) values.
std::vector<double> moving_average_forecast(std::span<const double> lookback, std::size_t window, std::size_t horizon);

inline constexpr std::size_t kMovingAverageWindow = 7;

/// min(25, max(3, 2 * floor(L / 2) + 1))
std::size_t dlinear_kernel(std::size_t lookback);

/// Centered moving average of odd width `kernel`, replicate-padded at both ends.
std::vector<double> moving_average_trend(std::span<const double> x, std::size_t kernel);

struct DLinearParams {
  std::size_t lookback = 0;
  std::size_t horizon = 0;
  std::size_t kernel = 3;
  std::vector<double> w_trend;  // horizon x lookback, row-major
  std::vector<double> b_trend;
  std::vector<double> w_resid;
  std::vector<double> b_resid;

  static DLinearParams zeros(std::size_t lookback, std::size_t horizon);
  /// Weights and biases uniform in [-1/sqrt(L), 1/sqrt(L)].
  static DLinearParams random(std::size_t lookback, std::size_t horizon, std::uint64_t seed);

  [[nodiscard]] std::size_t size() const { return 2 * horizon * lookback + 2 * horizon; }
  [[nodiscard]] std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

/// Trend/residual decomposition of one lookback, shared by forward and backward passes.
struct Decomposed {
  std::vector<double> trend;
  std::vector<double> resid;
};

Decomposed decompose(std::span<const double> lookback, std::size_t kernel);

std::vector<double> dlinear_forecast(std::span<const double> lookback, const DLinearParams& params);
std::vector<double> dlinear_forecast(const Decomposed& input, const DLinearParams& params);

struct Sample {
  Decomposed input;
  std::vector<double> target;
};

std::vector<Sample> make_samples(std::span<const ForecastWindow> windows, std::size_t kernel);

/// Mean squared error over every (sample, step) of the batch.
double dlinear_loss(const DLinearParams& params, std::span<const Sample> batch);
/// Gradient of dlinear_loss in the flatten() layout.
std::vector<double> dlinear_gradient(const DLinearParams& params, std::span<const Sample> batch);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainedModel {
  ModelKind kind = ModelKind::last_value;
  std::optional<DLinearParams> params;
  std::uint64_t seed = 0;
  /// Early-stopping metric per epoch (validation MSE, or train MSE without validation windows).
  std::vector<double> train_log;
  std::size_t best_epoch = 0;
  bool stopped_on_train_loss = false;

  [[nodiscard]] std::vector<double> forecast(std::span<const double> lookback, std::size_t horizon) const;
};

/// Naive kinds return immediately. DLinear trains with Adam on shuffled mini-batches
/// and keeps the parameters of the best epoch. Throws std::invalid_argument when
/// `train` is empty or window shapes disagree.
TrainedModel train(ModelKind kind, std::span<const ForecastWindow> train, std::span<const ForecastWindow> val,
                   const TrainConfig& config, std::uint64_t seed);

nlohmann::json checkpoint_to_json(const TrainedModel& model);
TrainedModel checkpoint_from_json(const nlohmann::json& j);

}  // namespace eventcast
