#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "scalemix/copula.hpp"
#include "scalemix/panel.hpp"

namespace scalemix {

struct PairChi {
  std::size_t site_a = 0;
  std::size_t site_b = 0;
  int lag = 0;
  double u = 0.0;
  double chi_hat = 0.0;       // clipped to [0, 1]; NaN if no valid time pair
  double chi_unclipped = 0.0;
  std::size_t n_effective = 0;  // valid (t, t + lag) pairs over all years
  bool clipped = false;
};

/// chi(u) for the ordered pair: site_a at day t, site_b at day t + lag, within each year.
/// Thresholds are per-site type-7 quantiles pooled over years; exceedance is strict (y > q).
PairChi empirical_chi_pair(const PanelDataset& data, std::size_t site_a, std::size_t site_b, int lag, double u);

struct GridConfig {
  std::vector<double> u_levels{0.90, 0.95, 0.99};
  std::size_t n_distance_bins = 8;
  std::vector<int> lags{0, 1, 2, 3, 4, 5, 6, 7};
  /// m1 + 1 edges in km; when empty, equal-width bins on [0, half the maximum site distance].
  std::vector<double> dist_edges;

  void validate() const;
};

std::vector<double> default_distance_edges(std::span<const Point2> sites, std::size_t n_bins);

/// Binned chi grid, values indexed (level, distance bin, lag) row-major.
struct ChiGrid {
  std::vector<double> u_levels;
  std::vector<double> dist_edges;
  std::vector<int> lags;
  std::vector<double> values;         // NaN for empty cells
  std::vector<std::size_t> n_pairs;   // site pairs contributing to each cell
  std::size_t clipped = 0;            // pair estimates clipped at 1

  [[nodiscard]] std::size_t n_levels() const noexcept { return u_levels.size(); }
  [[nodiscard]] std::size_t m1() const noexcept { return dist_edges.empty() ? 0 : dist_edges.size() - 1; }
  [[nodiscard]] std::size_t m2() const noexcept { return lags.size(); }
  [[nodiscard]] std::size_t cell(std::size_t level, std::size_t bin, std::size_t lag) const noexcept {
    return (level * m1() + bin) * m2() + lag;
  }
  [[nodiscard]] double at(std::size_t level, std::size_t bin, std::size_t lag) const { return values[cell(level, bin, lag)]; }
  [[nodiscard]] std::size_t empty_cells() const noexcept;

  bool operator==(const ChiGrid& o) const;
};

/// Index of the left-closed, right-open bin containing d, or nullopt outside [e0, e_last).
std::optional<std::size_t> distance_bin(std::span<const double> edges, double d) noexcept;

/// Mean over all distinct site pairs in each distance bin of the pair chi, both orientations
/// averaged for nonzero lags. Parallel over site pairs.
ChiGrid chi_grid(const PanelDataset& data, const GridConfig& config);
/// Single-threaded reference built directly on empirical_chi_pair.
ChiGrid chi_grid_serial(const PanelDataset& data, const GridConfig& config);

void write_chi_grid_csv(std::ostream& out, const ChiGrid& grid);
nlohmann::json chi_grid_to_json(const ChiGrid& grid);
ChiGrid chi_grid_from_json(const nlohmann::json& j);

/// Indices of the k nearest other sites (ties broken by index).
std::vector<std::size_t> nearest_neighbours(std::span<const Point2> sites, std::size_t site, std::size_t k);

/// Pr(the four nearest neighbours of `site` all exceed at t | `site` exceeds at t - lag).
double chi_star(const PanelDataset& data, std::size_t site, int lag, double u);

struct RmseSummary {
  std::vector<double> per_site;
  double mean = 0.0;
};
/// draws[j][i] is draw j for site i. NaN draws are skipped per site.
RmseSummary rmse_chi_star(std::span<const double> empirical, const std::vector<std::vector<double>>& draws);

enum class DependenceMode { Space, Time, SpaceTime };
std::string to_string(DependenceMode m);
DependenceMode dependence_mode_from_string(const std::string& s);

struct ClassCheckConfig {
  std::vector<double> u_levels{0.95, 0.99, 0.999};
  std::size_t n_replicates = 1'000'000;
  double distance_km = 10.0;
  int lag = 1;
  std::uint64_t seed = 1;
  /// chi(u_max) / chi(u_min) below this is read as decay toward zero.
  double decay_ratio = 0.5;
};

struct ClassCheck {
  DependenceMode mode = DependenceMode::Space;
  std::vector<double> u_levels;
  std::vector<double> chi;
  std::vector<double> se;
  std::vector<std::size_t> joint_counts;
  double eta_hat = 0.0;  // from the slope of log chi against log(1 - u)
  DepKind verdict = DepKind::AI;
  DepKind expected = DepKind::AI;
  [[nodiscard]] bool agrees() const noexcept { return verdict == expected; }
};

struct ClassReport {
  CopulaSpec spec;
  std::vector<ClassCheck> checks;
  [[nodiscard]] bool all_agree() const noexcept;
};

/// Monte Carlo chi(u) for the designated pair of each mode on a 2-site x (lag + 1)-day
/// layout, one independent replicate per pair, on exact uniform margins.
/// Throws ConfigError when the budget gives fewer than 500 expected marginal
/// exceedances at the highest level.
ClassReport verify_dependence_class(const CopulaSpec& spec, std::span<const DependenceMode> modes,
                                    const ClassCheckConfig& config);

nlohmann::json class_report_to_json(const ClassReport& report);

}  // namespace scalemix
