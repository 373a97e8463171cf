#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace scalemix {

/// Conv2D(in_channels -> filters, kernel x kernel, stride 1, zero "same" padding, ReLU)
/// -> Flatten -> Dense(width, ReLU) for each width -> Dense(outputs, sigmoid).
struct NetworkConfig {
  std::size_t in_channels = 3;
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t filters = 16;
  std::size_t kernel = 3;
  std::vector<std::size_t> dense{64, 32};
  std::size_t outputs = 4;

  void validate() const;
  [[nodiscard]] std::size_t input_size() const noexcept { return in_channels * height * width; }
  bool operator==(const NetworkConfig&) const = default;
};

struct RmspropConfig {
  double learning_rate = 1e-3;
  double rho = 0.9;
  double epsilon = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 128;
  RmspropConfig optimizer;
  std::uint64_t seed = 1;
};

struct LossCurve {
  std::vector<double> train_mae;
  std::vector<double> validation_mae;
  std::size_t best_epoch = 0;  // 1-based; 0 before any epoch
};

/// All weights live in one flat vector; each layer views a slice of it.
class Network {
 public:
  Network() = default;
  /// He-uniform fan-in initialization for ReLU layers, LeCun-uniform for the sigmoid layer;
  /// biases start at zero.
  Network(const NetworkConfig& config, std::uint64_t seed);

  [[nodiscard]] const NetworkConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t parameter_count() const noexcept { return params_.size(); }
  [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }
  [[nodiscard]] std::span<double> parameters() noexcept { return params_; }

  /// Output in (0, 1)^outputs for one input of config().input_size() values laid out
  /// channel-major (channel, row, column).
  [[nodiscard]] std::vector<double> predict(std::span<const double> input) const;

  /// Mean absolute error over the batch and all outputs, and its gradient (accumulated into
  /// `grad`, which must have parameter_count() entries and is overwritten).
  double loss_and_gradient(std::span<const double> inputs, std::span<const double> targets,
                           std::span<const std::size_t> rows, std::span<double> grad) const;
  /// Loss only, over the given rows.
  [[nodiscard]] double loss(std::span<const double> inputs, std::span<const double> targets,
                            std::span<const std::size_t> rows) const;

  [[nodiscard]] nlohmann::json to_json() const;
  static Network from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Network load(const std::filesystem::path& path);

  bool operator==(const Network& o) const { return config_ == o.config_ && params_ == o.params_; }

 private:
  struct Layout {
    std::size_t conv_w = 0, conv_b = 0;
    std::vector<std::size_t> dense_w, dense_b, dense_in, dense_out;
  };
  void build_layout();
  struct Tape;
  void forward(std::span<const double> input, Tape& tape) const;

  NetworkConfig config_;
  Layout layout_;
  std::vector<double> params_;
};

/// Optimizer state: per-weight running mean of squared gradients.
class Rmsprop {
 public:
  Rmsprop(std::size_t n, RmspropConfig config) : config_(config), mean_square_(n, 0.0) {}
  void step(std::span<double> params, std::span<const double> grad);
  [[nodiscard]] std::span<const double> mean_square() const noexcept { return mean_square_; }

 private:
  RmspropConfig config_;
  std::vector<double> mean_square_;
};

/// Minibatch RMSprop on MAE. Inputs are row-major (rows x input_size), targets
/// (rows x outputs). Each epoch shuffles the training rows from the seed; the weights of
/// the epoch with the lowest validation MAE are kept (training MAE when no validation rows).
/// Throws TrainingError naming the epoch and batch if a loss is non-finite.
LossCurve train_network(Network& net, std::span<const double> inputs, std::span<const double> targets,
                        std::span<const std::size_t> train_rows, std::span<const std::size_t> validation_rows,
                        const TrainConfig& config,
                        const std::function<void(std::size_t, double, double)>& on_epoch = {});

}  // namespace scalemix
