#include "scalemix/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "scalemix/errors.hpp"
#include "scalemix/rng.hpp"

namespace scalemix {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "scalemix-network";

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sign(double e) { return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0); }

}  // namespace

void NetworkConfig::validate() const {
  if (in_channels == 0 || height == 0 || width == 0) throw ConfigError("network: input shape must be positive");
  if (filters == 0) throw ConfigError("network: need at least one filter");
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("network: kernel size must be odd");
  if (outputs == 0) throw ConfigError("network: need at least one output");
  for (auto w : dense)
    if (w == 0) throw ConfigError("network: dense widths must be positive");
}

// Activations of one forward pass.
struct Network::Tape {
  std::vector<double> input;
  std::vector<double> conv;               // post-ReLU, filters x H x W
  std::vector<std::vector<double>> act;   // dense outputs (post activation)
};

void Network::build_layout() {
  const auto& c = config_;
  std::size_t off = 0;
  layout_ = {};
  layout_.conv_w = off;
  off += c.filters * c.in_channels * c.kernel * c.kernel;
  layout_.conv_b = off;
  off += c.filters;
  std::size_t in = c.filters * c.height * c.width;
  std::vector<std::size_t> widths = c.dense;
  widths.push_back(c.outputs);
  for (auto out : widths) {
    layout_.dense_in.push_back(in);
    layout_.dense_out.push_back(out);
    layout_.dense_w.push_back(off);
    off += in * out;
    layout_.dense_b.push_back(off);
    off += out;
    in = out;
  }
  params_.assign(off, 0.0);
}

Network::Network(const NetworkConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  build_layout();
  RandomStream rng = RandomStream(seed).child(stream_tag::kWeights);
  auto fill = [&](std::size_t off, std::size_t n, double limit) {
    for (std::size_t i = 0; i < n; ++i) params_[off + i] = limit * (2.0 * rng.uniform() - 1.0);
  };
  const std::size_t conv_fan_in = config_.in_channels * config_.kernel * config_.kernel;
  fill(layout_.conv_w, config_.filters * conv_fan_in, std::sqrt(6.0 / static_cast<double>(conv_fan_in)));
  const std::size_t n_dense = layout_.dense_w.size();
  for (std::size_t l = 0; l < n_dense; ++l) {
    const auto fan_in = static_cast<double>(layout_.dense_in[l]);
    const double limit = l + 1 == n_dense ? std::sqrt(3.0 / fan_in) : std::sqrt(6.0 / fan_in);
    fill(layout_.dense_w[l], layout_.dense_in[l] * layout_.dense_out[l], limit);
  }
}

void Network::forward(std::span<const double> input, Tape& tape) const {
  const auto& c = config_;
  const std::size_t h = c.height, w = c.width, k = c.kernel, pad = k / 2;
  tape.input.assign(input.begin(), input.end());
  tape.conv.assign(c.filters * h * w, 0.0);
  const double* cw = params_.data() + layout_.conv_w;
  const double* cb = params_.data() + layout_.conv_b;
  for (std::size_t f = 0; f < c.filters; ++f)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        double z = cb[f];
        for (std::size_t ch = 0; ch < c.in_channels; ++ch)
          for (std::size_t di = 0; di < k; ++di) {
            const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i + di) - static_cast<std::ptrdiff_t>(pad);
            if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t dj = 0; dj < k; ++dj) {
              const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j + dj) - static_cast<std::ptrdiff_t>(pad);
              if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(w)) continue;
              z += cw[((f * c.in_channels + ch) * k + di) * k + dj] *
                   input[(ch * h + static_cast<std::size_t>(ii)) * w + static_cast<std::size_t>(jj)];
            }
          }
        tape.conv[(f * h + i) * w + j] = std::max(z, 0.0);
      }

  const std::size_t n_dense = layout_.dense_w.size();
  tape.act.resize(n_dense);
  const std::vector<double>* prev = &tape.conv;
  for (std::size_t l = 0; l < n_dense; ++l) {
    const std::size_t in = layout_.dense_in[l], out = layout_.dense_out[l];
    const double* W = params_.data() + layout_.dense_w[l];
    const double* b = params_.data() + layout_.dense_b[l];
    auto& a = tape.act[l];
    a.resize(out);
    const bool last = l + 1 == n_dense;
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = W + o * in;
      double z = b[o];
      for (std::size_t i = 0; i < in; ++i) z += row[i] * (*prev)[i];
      a[o] = last ? sigmoid(z) : std::max(z, 0.0);
    }
    prev = &a;
  }
}

std::vector<double> Network::predict(std::span<const double> input) const {
  if (input.size() != config_.input_size()) throw ShapeError("network: input size does not match the configuration");
  Tape tape;
  forward(input, tape);
  return tape.act.back();
}

double Network::loss(std::span<const double> inputs, std::span<const double> targets,
                     std::span<const std::size_t> rows) const {
  if (rows.empty()) return 0.0;
  const std::size_t d = config_.input_size(), m = config_.outputs;
  Tape tape;
  double total = 0.0;
  for (auto r : rows) {
    forward(inputs.subspan(r * d, d), tape);
    const auto& y = tape.act.back();
    for (std::size_t o = 0; o < m; ++o) total += std::abs(y[o] - targets[r * m + o]);
  }
  return total / static_cast<double>(rows.size() * m);
}

double Network::loss_and_gradient(std::span<const double> inputs, std::span<const double> targets,
                                  std::span<const std::size_t> rows, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw ShapeError("network: gradient buffer has the wrong size");
  std::fill(grad.begin(), grad.end(), 0.0);
  if (rows.empty()) return 0.0;
  const auto& c = config_;
  const std::size_t d = c.input_size(), m = c.outputs, h = c.height, w = c.width, k = c.kernel, pad = k / 2;
  const std::size_t n_dense = layout_.dense_w.size();
  const double scale = 1.0 / static_cast<double>(rows.size() * m);
  Tape tape;
  std::vector<double> delta, delta_prev;
  double total = 0.0;
  for (auto r : rows) {
    forward(inputs.subspan(r * d, d), tape);
    const auto& y = tape.act.back();
    delta.assign(m, 0.0);
    for (std::size_t o = 0; o < m; ++o) {
      const double e = y[o] - targets[r * m + o];
      total += std::abs(e);
      delta[o] = scale * sign(e) * y[o] * (1.0 - y[o]);  // through the sigmoid
    }
    for (std::size_t l = n_dense; l-- > 0;) {
      const std::size_t in = layout_.dense_in[l], out = layout_.dense_out[l];
      const std::vector<double>& a_in = l == 0 ? tape.conv : tape.act[l - 1];
      const double* W = params_.data() + layout_.dense_w[l];
      double* gW = grad.data() + layout_.dense_w[l];
      double* gb = grad.data() + layout_.dense_b[l];
      delta_prev.assign(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double dz = delta[o];
        if (dz == 0.0) continue;
        gb[o] += dz;
        double* grow = gW + o * in;
        const double* row = W + o * in;
        for (std::size_t i = 0; i < in; ++i) {
          grow[i] += dz * a_in[i];
          delta_prev[i] += dz * row[i];
        }
      }
      for (std::size_t i = 0; i < in; ++i)
        if (a_in[i] <= 0.0) delta_prev[i] = 0.0;  // ReLU of the layer below
      delta.swap(delta_prev);
    }
    // delta now holds dL/dz of the conv layer (post ReLU mask).
    double* gcw = grad.data() + layout_.conv_w;
    double* gcb = grad.data() + layout_.conv_b;
    for (std::size_t f = 0; f < c.filters; ++f)
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const double dz = delta[(f * h + i) * w + j];
          if (dz == 0.0) continue;
          gcb[f] += dz;
          for (std::size_t ch = 0; ch < c.in_channels; ++ch)
            for (std::size_t di = 0; di < k; ++di) {
              const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i + di) - static_cast<std::ptrdiff_t>(pad);
              if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t dj = 0; dj < k; ++dj) {
                const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j + dj) - static_cast<std::ptrdiff_t>(pad);
                if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(w)) continue;
                gcw[((f * c.in_channels + ch) * k + di) * k + dj] +=
                    dz * tape.input[(ch * h + static_cast<std::size_t>(ii)) * w + static_cast<std::size_t>(jj)];
              }
            }
        }
  }
  return total * scale;
}

void Rmsprop::step(std::span<double> params, std::span<const double> grad) {
  const double rho = config_.rho, lr = config_.learning_rate, eps = config_.epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    mean_square_[i] = rho * mean_square_[i] + (1.0 - rho) * grad[i] * grad[i];
    params[i] -= lr * grad[i] / (std::sqrt(mean_square_[i]) + eps);
  }
}

LossCurve train_network(Network& net, std::span<const double> inputs, std::span<const double> targets,
                        std::span<const std::size_t> train_rows, std::span<const std::size_t> validation_rows,
                        const TrainConfig& config, const std::function<void(std::size_t, double, double)>& on_epoch) {
  if (train_rows.empty()) throw ConfigError("train: empty training set");
  if (config.batch_size == 0 || config.epochs == 0) throw ConfigError("train: epochs and batch size must be positive");
  const std::size_t d = net.config().input_size(), m = net.config().outputs;
  if (inputs.size() % d != 0 || targets.size() != inputs.size() / d * m)
    throw ShapeError("train: inputs and targets do not match the network shape");

  LossCurve curve;
  Rmsprop opt(net.parameter_count(), config.optimizer);
  std::vector<double> grad(net.parameter_count());
  std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
  std::vector<double> best(net.parameters().begin(), net.parameters().end());
  double best_score = std::numeric_limits<double>::infinity();
  const RandomStream shuffle_root = RandomStream(config.seed).child(stream_tag::kShuffle);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    RandomStream rng = shuffle_root.child(epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    double sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      const double l = net.loss_and_gradient(inputs, targets, batch, grad);
      if (!std::isfinite(l) || !std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); }))
        throw TrainingError("train: non-finite loss in epoch " + std::to_string(epoch + 1) + ", batch " +
                            std::to_string(batch_index));
      sum += l * static_cast<double>(len);
      opt.step(net.parameters(), grad);
    }
    const double train_mae = sum / static_cast<double>(order.size());
    const double val_mae = validation_rows.empty() ? train_mae : net.loss(inputs, targets, validation_rows);
    if (!std::isfinite(val_mae)) throw TrainingError("train: non-finite validation loss in epoch " + std::to_string(epoch + 1));
    curve.train_mae.push_back(train_mae);
    curve.validation_mae.push_back(val_mae);
    if (val_mae < best_score) {
      best_score = val_mae;
      curve.best_epoch = epoch + 1;
      std::copy(net.parameters().begin(), net.parameters().end(), best.begin());
    }
    if (on_epoch) on_epoch(epoch + 1, train_mae, val_mae);
  }
  std::copy(best.begin(), best.end(), net.parameters().begin());
  return curve;
}

nlohmann::json Network::to_json() const {
  const auto& c = config_;
  nlohmann::json layers = nlohmann::json::array();
  auto slice = [&](std::size_t off, std::size_t n) {
    return std::vector<double>(params_.begin() + static_cast<std::ptrdiff_t>(off),
                               params_.begin() + static_cast<std::ptrdiff_t>(off + n));
  };
  layers.push_back({{"type", "conv2d"},
                    {"activation", "relu"},
                    {"shape", {c.filters, c.in_channels, c.kernel, c.kernel}},
                    {"weights", slice(layout_.conv_w, c.filters * c.in_channels * c.kernel * c.kernel)},
                    {"bias", slice(layout_.conv_b, c.filters)}});
  layers.push_back({{"type", "flatten"}});
  for (std::size_t l = 0; l < layout_.dense_w.size(); ++l) {
    const bool last = l + 1 == layout_.dense_w.size();
    layers.push_back({{"type", "dense"},
                      {"activation", last ? "sigmoid" : "relu"},
                      {"shape", {layout_.dense_out[l], layout_.dense_in[l]}},
                      {"weights", slice(layout_.dense_w[l], layout_.dense_out[l] * layout_.dense_in[l])},
                      {"bias", slice(layout_.dense_b[l], layout_.dense_out[l])}});
  }
  return {{"format", kFormatName},
          {"version", kFormatVersion},
          {"config",
           {{"in_channels", c.in_channels},
            {"height", c.height},
            {"width", c.width},
            {"filters", c.filters},
            {"kernel", c.kernel},
            {"dense", c.dense},
            {"outputs", c.outputs}}},
          {"parameter_count", params_.size()},
          {"layers", layers}};
}

Network Network::from_json(const nlohmann::json& j) {
  Network net;
  try {
    if (j.at("format").get<std::string>() != kFormatName) throw IngestError("network file: unknown format");
    if (j.at("version").get<int>() != kFormatVersion) throw IngestError("network file: unsupported version");
    const auto& c = j.at("config");
    net.config_.in_channels = c.at("in_channels").get<std::size_t>();
    net.config_.height = c.at("height").get<std::size_t>();
    net.config_.width = c.at("width").get<std::size_t>();
    net.config_.filters = c.at("filters").get<std::size_t>();
    net.config_.kernel = c.at("kernel").get<std::size_t>();
    net.config_.dense = c.at("dense").get<std::vector<std::size_t>>();
    net.config_.outputs = c.at("outputs").get<std::size_t>();
    net.config_.validate();
    net.build_layout();
    std::size_t off = 0;
    for (const auto& layer : j.at("layers")) {
      if (layer.at("type").get<std::string>() == "flatten") continue;
      for (const char* key : {"weights", "bias"}) {
        const auto v = layer.at(key).get<std::vector<double>>();
        if (off + v.size() > net.params_.size()) throw IngestError("network file: too many weights");
        std::copy(v.begin(), v.end(), net.params_.begin() + static_cast<std::ptrdiff_t>(off));
        off += v.size();
      }
    }
    if (off != net.params_.size()) throw IngestError("network file: weight count does not match the configuration");
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("network file: ") + e.what());
  }
  return net;
}

void Network::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

Network Network::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace scalemix
