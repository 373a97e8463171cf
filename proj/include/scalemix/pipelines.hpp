#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "scalemix/config.hpp"
#include "scalemix/estimator.hpp"
#include "scalemix/marginal.hpp"
#include "scalemix/panel.hpp"
#include "scalemix/tail_stats.hpp"

namespace scalemix {

using Logger = std::function<void(const std::string&)>;

/// Panel from config.data, or nullopt when the config has no data files.
std::optional<PanelDataset> load_data(const RunConfig& config);
/// Sites of the data, or the synthetic layout's sites.
std::vector<Site> run_sites(const RunConfig& config, const std::optional<PanelDataset>& data);

/// Data-scale value: GPD tail above p, and below it a monotone body that is exactly zero on
/// the lowest `dry_fraction` of the probability mass and reaches mu at u = p.
double uniform_to_rain(double u, const MarginalSpec& spec, std::size_t site, double dry_fraction);

/// Simulates config.copula on the sites. Data scale via uniform_to_rain when marginal.p > 0,
/// otherwise uniform scale.
PanelDataset simulate_dataset(const RunConfig& config, const std::vector<Site>& sites, std::size_t n_days,
                              std::size_t n_years, std::uint64_t seed);

/// Loads config.estimator if set (checking it matches `layout`), otherwise trains one.
Estimator obtain_estimator(const RunConfig& config, const SimulationLayout& layout, Variant variant,
                           std::uint64_t seed, const Logger& log, bool* trained = nullptr);
Estimator train_for(const RunConfig& config, const SimulationLayout& layout, Variant variant, std::uint64_t seed,
                    const Logger& log);

SimulationLayout layout_for(const RunConfig& config, const PanelDataset& data, double censor_p);

struct FitResult {
  bool marginal_skipped = false;
  QuantileRegressionFit thresholds;
  MarginalSpec marginal;
  GpdFit gpd;
  ChiGrid grid;
  DependenceParams theta{};
  BootstrapResult boot;
  nlohmann::json report;
};

/// Two-step fit: thresholds and GPD, then chi grids and the network estimate, then the
/// parametric bootstrap. The report mirrors a point-estimate-plus-interval table.
FitResult pipeline_fit(const RunConfig& config, const PanelDataset& data, const Estimator& est, bool estimator_trained,
                       const Logger& log);

struct SelectionResult {
  std::vector<Variant> candidates;
  std::vector<std::vector<double>> rmse;  // [candidate][fold]
  std::vector<double> mean_rmse;
  nlohmann::json report;
};

/// Estimators for every candidate on the training-block layout (N - holdout years).
std::vector<Estimator> train_selection_estimators(const RunConfig& config, const PanelDataset& data, const Logger& log);

/// Repeated random year splits: each candidate is fitted on the training block, its chi grid for
/// the held-out block size is averaged over Monte Carlo simulations, and compared with the
/// held-out block's grid by RMSE over cells defined in both.
SelectionResult pipeline_model_select(const RunConfig& config, const PanelDataset& data,
                                      const std::vector<Estimator>& estimators, const Logger& log);

/// RMSE over cells defined in both grids; NaN if none.
double grid_rmse(const ChiGrid& a, const ChiGrid& b);
/// Cell-wise mean over grids, skipping NaN; NaN where no grid is defined.
ChiGrid mean_grid(const std::vector<ChiGrid>& grids);

struct StormCell {
  bool is_site = false;
  std::string site_id;
  Point2 coord;
  double mu = 0.0;
};

struct StormResult {
  std::vector<StormCell> cells;
  std::size_t n_days = 0;
  std::vector<double> uniform;  // cells x days, row-major
  std::vector<double> values;   // data scale, censored at mu
  std::vector<double> lattice_exceed_fraction;  // per day
};

/// Lattice over the site bounding box plus the sites themselves. Throws SizeError when the
/// cell count exceeds config.storm.max_cells, before any allocation.
std::vector<StormCell> storm_cells(const RunConfig& config, const std::vector<Site>& sites,
                                   const std::array<double, 3>& mu_plane, std::span<const double> site_mu);
StormResult pipeline_storm(const RunConfig& config, const CopulaSpec& spec, const MarginalSpec& marginal,
                           const std::vector<StormCell>& cells, std::uint64_t seed);
void write_storm_csv(std::ostream& out, const StormResult& r);

struct DiagnoseResult {
  QuantileRegressionFit thresholds;
  std::vector<std::optional<GpdFit>> site_gpd;
  std::optional<GpdFit> pooled_gpd;
  ChiGrid grid;
  std::vector<double> band_lo, band_hi;  // per grid cell
  std::vector<std::vector<double>> chi_star;  // [lag][site]
  nlohmann::json report;
};

/// Whole years resampled with replacement.
PanelDataset resample_years(const PanelDataset& data, RandomStream& rng);

DiagnoseResult pipeline_diagnose(const RunConfig& config, const PanelDataset& data, const Logger& log);

/// Writes to a fresh directory root/<name>-NNN (never reusing an existing one).
std::filesystem::path make_versioned_dir(const std::filesystem::path& root, const std::string& name);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace scalemix
