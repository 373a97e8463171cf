#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "scalemix/errors.hpp"
#include "scalemix/network.hpp"
#include "scalemix/rng.hpp"

using namespace scalemix;

namespace {

NetworkConfig toy_config() {
  NetworkConfig c;
  c.in_channels = 2;
  c.height = 4;
  c.width = 5;
  c.filters = 3;
  c.dense = {6, 5};
  c.outputs = 3;
  return c;
}

struct Data {
  std::vector<double> x, y;
  std::vector<std::size_t> rows;
};

Data toy_data(const NetworkConfig& c, std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  Data d;
  d.x.resize(n * c.input_size());
  d.y.resize(n * c.outputs);
  for (auto& v : d.x) v = rng.uniform();
  for (auto& v : d.y) v = rng.uniform();
  d.rows.resize(n);
  std::iota(d.rows.begin(), d.rows.end(), 0);
  return d;
}

}  // namespace

TEST(Network, ParameterCount) {
  const NetworkConfig c;  // 3x8x8 input, 16 3x3 filters, 64, 32, 4
  const Network net(c, 1);
  const std::size_t conv = 16 * 3 * 3 * 3 + 16;
  const std::size_t d1 = 16 * 8 * 8 * 64 + 64, d2 = 64 * 32 + 32, d3 = 32 * 4 + 4;
  EXPECT_EQ(net.parameter_count(), conv + d1 + d2 + d3);
}

TEST(Network, OutputsInUnitInterval) {
  const auto c = toy_config();
  const Network net(c, 3);
  const auto d = toy_data(c, 20, 4);
  for (std::size_t r = 0; r < 20; ++r) {
    const auto out = net.predict(std::span<const double>(d.x).subspan(r * c.input_size(), c.input_size()));
    ASSERT_EQ(out.size(), c.outputs);
    for (double v : out) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Network, GradientMatchesFiniteDifferences) {
  const auto c = toy_config();
  Network net(c, 5);
  // zero biases put dead units exactly on the ReLU kink; move off it
  RandomStream jitter(9);
  for (auto& v : net.parameters()) v += 0.05 * jitter.normal();
  const auto d = toy_data(c, 7, 6);
  std::vector<double> grad(net.parameter_count());
  net.loss_and_gradient(d.x, d.y, d.rows, grad);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < net.parameter_count(); ++i) {
    const double keep = net.parameters()[i];
    net.parameters()[i] = keep + h;
    const double up = net.loss(d.x, d.y, d.rows);
    net.parameters()[i] = keep - h;
    const double down = net.loss(d.x, d.y, d.rows);
    net.parameters()[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - grad[i]) / denom);
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Network, LossIsMeanAbsoluteError) {
  const auto c = toy_config();
  const Network net(c, 7);
  const auto d = toy_data(c, 5, 8);
  double s = 0.0;
  for (std::size_t r = 0; r < 5; ++r) {
    const auto out = net.predict(std::span<const double>(d.x).subspan(r * c.input_size(), c.input_size()));
    for (std::size_t k = 0; k < c.outputs; ++k) s += std::abs(out[k] - d.y[r * c.outputs + k]);
  }
  EXPECT_NEAR(net.loss(d.x, d.y, d.rows), s / (5.0 * static_cast<double>(c.outputs)), 1e-14);
}

TEST(Network, ConstantTargetConverges) {
  const auto c = toy_config();
  Network net(c, 9);
  auto d = toy_data(c, 256, 10);
  for (std::size_t i = 0; i < d.y.size(); ++i) d.y[i] = 0.3 + 0.2 * static_cast<double>(i % c.outputs);
  TrainConfig t;
  t.epochs = 300;
  t.batch_size = 32;
  t.optimizer.learning_rate = 3e-3;
  const auto curve = train_network(net, d.x, d.y, d.rows, {}, t);
  EXPECT_LT(net.loss(d.x, d.y, d.rows), 1e-3);
  EXPECT_GE(curve.best_epoch, 1u);
  EXPECT_EQ(curve.train_mae.size(), 300u);
}

TEST(Network, TrainingIsDeterministicAndKeepsBest) {
  const auto c = toy_config();
  const auto d = toy_data(c, 100, 11);
  std::vector<std::size_t> tr(d.rows.begin(), d.rows.begin() + 80), va(d.rows.begin() + 80, d.rows.end());
  TrainConfig t;
  t.epochs = 15;
  t.batch_size = 16;
  t.seed = 4;
  Network a(c, 12), b(c, 12);
  const auto ca = train_network(a, d.x, d.y, tr, va, t);
  const auto cb = train_network(b, d.x, d.y, tr, va, t);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(ca.validation_mae, cb.validation_mae);
  const auto best = std::min_element(ca.validation_mae.begin(), ca.validation_mae.end());
  EXPECT_EQ(ca.best_epoch, static_cast<std::size_t>(best - ca.validation_mae.begin()) + 1);
  EXPECT_NEAR(a.loss(d.x, d.y, va), *best, 1e-12);
}

TEST(Network, NonFiniteLossNamesBatch) {
  const auto c = toy_config();
  Network net(c, 13);
  auto d = toy_data(c, 40, 14);
  d.x[5] = std::nan("");
  TrainConfig t;
  t.epochs = 2;
  t.batch_size = 8;
  try {
    train_network(net, d.x, d.y, d.rows, {}, t);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
  }
}

TEST(Network, JsonAndFileRoundTrip) {
  const auto c = toy_config();
  const Network net(c, 15);
  const Network back = Network::from_json(nlohmann::json::parse(net.to_json().dump()));
  EXPECT_TRUE(back == net);
  const auto path = std::filesystem::temp_directory_path() / "scalemix_net_roundtrip.json";
  net.save(path);
  EXPECT_TRUE(Network::load(path) == net);
  std::filesystem::remove(path);
  auto j = net.to_json();
  j["layers"].back()["bias"].erase(0);
  EXPECT_THROW(Network::from_json(j), UserError);
}

TEST(Rmsprop, StepFormula) {
  RmspropConfig cfg{0.1, 0.9, 1e-8};
  Rmsprop opt(2, cfg);
  std::vector<double> p{1.0, -1.0};
  const std::vector<double> g{0.5, -2.0};
  opt.step(p, g);
  for (std::size_t i = 0; i < 2; ++i) {
    const double ms = 0.1 * g[i] * g[i];
    EXPECT_NEAR(opt.mean_square()[i], ms, 1e-15);
  }
  EXPECT_NEAR(p[0], 1.0 - 0.1 * 0.5 / (std::sqrt(0.1 * 0.25) + 1e-8), 1e-12);
  EXPECT_NEAR(p[1], -1.0 + 0.1 * 2.0 / (std::sqrt(0.1 * 4.0) + 1e-8), 1e-12);
}

TEST(NetworkConfig, Validation) {
  NetworkConfig c;
  c.kernel = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = NetworkConfig{};
  c.outputs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}
