#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "scalemix/copula.hpp"
#include "scalemix/estimator.hpp"
#include "scalemix/marginal.hpp"
#include "scalemix/network.hpp"
#include "scalemix/tail_stats.hpp"

namespace scalemix {

struct DataSource {
  std::filesystem::path stations;
  std::filesystem::path values;
  ValueScale scale = ValueScale::Data;
  [[nodiscard]] bool present() const { return !stations.empty() && !values.empty(); }
};

/// Layout used when no data file is given.
struct SyntheticLayout {
  std::size_t n_sites = 30;
  std::size_t n_days = 92;
  std::size_t n_years = 20;
  std::uint64_t site_seed = 2024;
};

/// Marginal model of the run: p, sigma, xi, and thresholds as a plane in the site
/// coordinates (mu = b0 + b1 x + b2 y) unless explicit per-site values are given.
struct MarginalConfig {
  double p = 0.90;
  double sigma = 46.34;
  double xi = 0.114;
  std::array<double, 3> mu_plane{80.0, 0.15, -0.25};
  std::vector<double> mu;  // per site; overrides the plane when non-empty
  /// Fraction of below-threshold days simulated as exactly zero.
  double dry_fraction = 0.4;

  [[nodiscard]] MarginalSpec spec_for(const std::vector<Site>& sites) const;
};

struct TrainingConfig {
  std::size_t k = 5000;
  double validation_fraction = 0.2;
  TrainConfig train;
  NetworkConfig network;  // input shape is taken from the grid
};

struct BootstrapConfig {
  std::size_t b = 400;
  double level = 0.90;
};

struct SelectionConfig {
  std::vector<Variant> candidates{Variant::M1, Variant::M3};
  std::size_t folds = 50;
  std::size_t holdout_years = 5;
  std::size_t mc_simulations = 500;
};

struct StormConfig {
  std::size_t n_days = 4;
  std::size_t nx = 40;
  std::size_t ny = 24;
  double margin_km = 2.0;
  std::size_t max_cells = 4000;
  std::filesystem::path report;  // optional fit report supplying the parameters
};

struct DiagnoseConfig {
  std::size_t block_bootstrap = 200;
  double band_level = 0.90;
  std::vector<int> chi_star_lags{0, 1, 2};
  double chi_star_u = 0.95;
};

struct VerifyConfig {
  std::vector<DependenceMode> modes{DependenceMode::Space, DependenceMode::Time, DependenceMode::SpaceTime};
  ClassCheckConfig check;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 0;  // 0: OpenMP default
  std::filesystem::path output_dir = "runs";
  DataSource data;
  SyntheticLayout layout;
  CopulaSpec copula;
  MarginalConfig marginal;
  ParamBox box;
  GridConfig grid;
  TrainingConfig training;
  BootstrapConfig bootstrap;
  SelectionConfig selection;
  StormConfig storm;
  DiagnoseConfig diagnose;
  VerifyConfig verify;
  std::filesystem::path estimator;  // trained estimator file; trained on the fly when empty

  /// Checks every budget and parameter; throws ConfigError.
  void validate() const;
};

/// Documented lower bounds on the budgets.
inline constexpr std::size_t kMinTrainingK = 100;

/// Parses a config object; relative paths are resolved against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace scalemix
