#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "scalemix/copula.hpp"
#include "scalemix/marginal.hpp"
#include "scalemix/network.hpp"
#include "scalemix/panel.hpp"
#include "scalemix/rng.hpp"
#include "scalemix/stats.hpp"
#include "scalemix/tail_stats.hpp"

namespace scalemix {

inline constexpr std::size_t kNumDependenceParams = 4;
using DependenceParams = std::array<double, kNumDependenceParams>;  // delta, phi, psi1, psi2

inline constexpr std::array<const char*, kNumDependenceParams> kDependenceNames{"delta", "phi", "psi1", "psi2"};

struct ParamBox {
  DependenceParams lo{0.0, 0.0, 4.0, 0.0};
  DependenceParams hi{1.0, 2.5, 16.0, 2.5};

  void validate() const;
  [[nodiscard]] DependenceParams scale(const DependenceParams& theta) const;
  [[nodiscard]] DependenceParams unscale(const DependenceParams& s) const;
  /// Independent uniform draw on the open box.
  [[nodiscard]] DependenceParams sample(RandomStream& rng) const;
  [[nodiscard]] bool contains(const DependenceParams& theta) const;
  bool operator==(const ParamBox&) const = default;
};

CopulaSpec with_params(CopulaSpec base, const DependenceParams& theta);
DependenceParams params_of(const CopulaSpec& spec);

/// Everything the training simulations share with the observed panel.
struct SimulationLayout {
  std::vector<Site> sites;
  std::size_t n_days = 0;
  std::size_t n_years = 0;
  double censor_p = 0.90;  // uniform values <= p are set to p; 0 disables
  GridConfig grid;         // resolved edges are fixed from `sites` on construction

  SimulationLayout() = default;
  SimulationLayout(std::vector<Site> sites, std::size_t n_days, std::size_t n_years, double censor_p, GridConfig grid);
};

/// Uniform-scale panel at `spec`, censored at layout.censor_p.
PanelDataset simulate_censored(const CopulaSimulator& sim, const SimulationLayout& layout, std::uint64_t seed);

struct Features {
  std::vector<double> values;  // levels x m1 x m2, empty cells imputed as 0
  std::size_t imputed = 0;
  std::size_t clipped = 0;
};
Features grid_features(const ChiGrid& grid);

struct TrainingSet {
  std::size_t input_size = 0;
  std::vector<double> inputs;   // K x input_size
  std::vector<double> targets;  // K x 4, scaled to [0, 1] by the box
  std::vector<DependenceParams> thetas;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  std::size_t resampled = 0;      // simulation failures replaced by a fresh draw
  std::size_t imputed_cells = 0;  // empty grid cells set to 0
  std::size_t clipped = 0;

  [[nodiscard]] std::size_t size() const noexcept { return thetas.size(); }
};

struct TrainingSetRequest {
  CopulaSpec base;  // variant, families and nu; dependence params are drawn from the box
  ParamBox box;
  std::size_t k = 5000;
  double validation_fraction = 0.2;
  std::uint64_t seed = 1;
};

/// K iid draws from the box, one simulated panel and chi grid per draw. Parallel over draws;
/// the result does not depend on the thread count.
TrainingSet generate_training_set(const TrainingSetRequest& req, const SimulationLayout& layout);
/// Single-threaded reference; identical output.
TrainingSet generate_training_set_serial(const TrainingSetRequest& req, const SimulationLayout& layout);

/// Network plus everything needed to apply it to a new panel.
struct Estimator {
  Network network;
  ParamBox box;
  CopulaSpec base;
  SimulationLayout layout;
  LossCurve curve;

  /// Chi grid -> network -> unscaled parameters, strictly inside the box.
  [[nodiscard]] DependenceParams estimate(const PanelDataset& data) const;
  [[nodiscard]] DependenceParams estimate_features(std::span<const double> features) const;

  [[nodiscard]] nlohmann::json to_json() const;
  static Estimator from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Estimator load(const std::filesystem::path& path);
};

NetworkConfig default_network_config(const SimulationLayout& layout);

Estimator train_estimator(const TrainingSet& ts, const TrainingSetRequest& req, const SimulationLayout& layout,
                          const NetworkConfig& net_config, const TrainConfig& train_config,
                          const std::function<void(std::size_t, double, double)>& on_epoch = {});

inline constexpr std::size_t kNumAllParams = 6;  // dependence params, then sigma, xi
inline constexpr std::array<const char*, kNumAllParams> kAllParamNames{"delta", "phi", "psi1", "psi2", "sigma", "xi"};

struct BootstrapRequest {
  std::size_t b = 400;
  double level = 0.90;
  std::uint64_t seed = 1;
  /// When false, sigma and xi columns are NaN (panel already on uniform scale).
  bool refit_marginal = true;
};

struct BootstrapResult {
  std::array<double, kNumAllParams> point{};
  std::vector<std::array<double, kNumAllParams>> draws;  // failed replicates hold NaN
  std::array<Interval, kNumAllParams> intervals{};
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
};

/// Parametric bootstrap at (theta_d, marginal): re-estimates theta_d with the same network and
/// (sigma, xi) by fit_gpd_mle above the fixed thresholds. Throws EstimationError if fewer than
/// 95% of replicates succeed.
BootstrapResult bootstrap(const Estimator& est, const DependenceParams& theta_d, const MarginalSpec& marginal,
                          const BootstrapRequest& req);

}  // namespace scalemix
