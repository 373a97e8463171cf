#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalemix/panel.hpp"
#include "scalemix/random_fields.hpp"

namespace scalemix {

/// Models 1-4 mix R(t) with W(s,t); models 5-8 mix R(s) with W(s,t).
enum class Variant { M1 = 1, M2, M3, M4, M5, M6, M7, M8 };

Variant variant_from_int(int v);
Variant variant_from_string(const std::string& s);  // "M3" or "3"
std::string to_string(Variant v);
[[nodiscard]] inline bool indexes_r_by_space(Variant v) { return static_cast<int>(v) >= 5; }

/// Copula parameters. For models 1-4 phi is the temporal scale (days) of R*(t);
/// for models 5-8 it is the spatial Cauchy scale (km) of R*(s).
struct CopulaSpec {
  Variant variant = Variant::M1;
  double delta = 0.5;
  double phi = 1.0;
  double psi1 = 10.0;
  double psi2 = 1.0;
  double nu = 1.0;
  TemporalFamily r_temporal_family = TemporalFamily::Exponential;
  TemporalFamily w_temporal_family = TemporalFamily::Exponential;
  SpatialFamily spatial_family = SpatialFamily::Cauchy;

  /// Throws DomainError unless delta in [0,1] and the scales and nu are positive.
  void validate() const;
};

ProcessClass r_process(const CopulaSpec& spec);
ProcessClass w_process(const CopulaSpec& spec);

enum class DepKind { AD, AI };
std::string to_string(DepKind k);

struct DependenceClass {
  DepKind in_space = DepKind::AI;
  DepKind in_time = DepKind::AI;
  DepKind in_space_time = DepKind::AI;
  std::optional<double> eta_hint;

  bool operator==(const DependenceClass& o) const {
    return in_space == o.in_space && in_time == o.in_time && in_space_time == o.in_space_time;
  }
};

/// Exact lookup of the extremal-dependence tables for models 1-8.
DependenceClass classify_dependence(const CopulaSpec& spec);

/// Below this distance from 0.5 the delta = 0.5 branch of the marginal CDF is used.
inline constexpr double kHalfDeltaSwitch = 1e-6;

/// Marginal CDF G(x) of X = R^delta W^(1-delta) for standard Pareto R, W.
double marginal_cdf(double x, double delta);
/// 1 - G, evaluated from log x without forming x.
double marginal_survival_log(double log_x, double delta);
/// Inverse of marginal_cdf on [0, 1), |G(x) - u| < 1e-10.
double marginal_quantile(double u, double delta);

/// Prepared simulator for one copula spec on a fixed layout. Each call draws an
/// independent year from the given stream; R and W use separate child streams.
class CopulaSimulator {
 public:
  CopulaSimulator(const CopulaSpec& spec, std::vector<Point2> sites, std::size_t n_days);

  [[nodiscard]] const CopulaSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] std::size_t n_sites() const noexcept { return sites_.size(); }
  [[nodiscard]] std::size_t n_days() const noexcept { return n_days_; }

  /// Length of the R index: days for M1-4, sites for M5-8.
  [[nodiscard]] std::size_t r_size() const noexcept;

  // Each simulate_* returns the number of Pareto-clamped entries.

  /// log R over its own index.
  std::size_t simulate_log_r(const RandomStream& year_stream, std::span<double> out) const;
  /// log W over sites x days, row-major.
  std::size_t simulate_log_w(const RandomStream& year_stream, std::span<double> out) const;

  /// log X = delta log R + (1 - delta) log W over sites x days.
  std::size_t simulate_log_x(const RandomStream& year_stream, std::span<double> out) const;
  /// X = R^delta W^(1-delta) formed directly on the Pareto scale (reference path).
  std::size_t simulate_x_direct(const RandomStream& year_stream, std::span<double> out) const;
  /// U = G(X) over sites x days.
  std::size_t simulate_uniform(const RandomStream& year_stream, std::span<double> out) const;

 private:
  void raw_r(const RandomStream& year_stream, std::span<double> out) const;
  void raw_w(const RandomStream& year_stream, std::span<double> out) const;

  CopulaSpec spec_;
  std::vector<Point2> sites_;
  std::size_t n_days_;
  GaussianFieldSampler r_sampler_;
  GaussianFieldSampler w_sampler_;
};

/// Stream for year `year` of a panel simulated from `seed`.
RandomStream year_stream(std::uint64_t seed, std::size_t year);

/// N independent years on uniform margins.
PanelDataset simulate_copula(const CopulaSpec& spec, const std::vector<Site>& sites, std::size_t n_days,
                             std::size_t n_years, std::uint64_t seed);

/// Same, reusing a prepared simulator; years drawn from `seed` via year_stream.
PanelDataset simulate_copula(const CopulaSimulator& sim, const std::vector<Site>& sites, std::size_t n_years,
                             std::uint64_t seed);

}  // namespace scalemix
