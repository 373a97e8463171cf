#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "scalemix/panel.hpp"

namespace scalemix {

/// Censored-GPD marginal: below the site threshold mu(s) values are censored,
/// above it exceedances follow GPD(sigma, xi), with threshold probability p.
struct MarginalSpec {
  double p = 0.90;
  std::vector<double> mu;
  double sigma = 1.0;
  double xi = 0.0;

  void validate() const;
};

/// Below this |xi| the exponential (xi = 0) branches are used.
inline constexpr double kXiZero = 1e-8;

/// u in (0,1) -> data scale. u <= p maps to mu(site) exactly.
double uniform_to_data(double u, const MarginalSpec& spec, std::size_t site);
/// Data scale -> (0,1]. y <= mu(site) maps to p; right inverse of uniform_to_data above p.
double data_to_uniform(double y, const MarginalSpec& spec, std::size_t site);

/// Applies uniform_to_data to every observed cell; the panel becomes data scale.
PanelDataset to_data_scale(const PanelDataset& uniform, const MarginalSpec& spec);

/// Pinball loss rho_tau(e) = e (tau - 1{e < 0}).
inline double pinball(double e, double tau) { return e * (tau - (e < 0.0 ? 1.0 : 0.0)); }

/// Linear tau-quantile regression on spatial coordinates: mu(s) = b0 + b1 x + b2 y.
struct QuantileRegressionFit {
  std::array<double, 3> coefficients{};  // intercept, x slope, y slope
  double tau = 0.9;
  double loss = 0.0;
  int iterations = 0;
  bool intercept_only = false;
  std::vector<double> mu;  // per site of the fitted panel

  [[nodiscard]] double predict(const Point2& p) const {
    return coefficients[0] + coefficients[1] * p.x + coefficients[2] * p.y;
  }
};

/// IRLS (majorize-minimize) quantile regression, iterated until the relative change in
/// pinball loss is below 1e-8. With one distinct site the model is intercept-only and
/// the intercept is the type-7 empirical quantile. Collinear sites throw LayoutError.
QuantileRegressionFit fit_quantile_regression(std::span<const double> y, std::span<const Point2> x, double tau);

/// Pools every observed cell of the panel, with its site coordinates as covariates.
QuantileRegressionFit fit_threshold_qr(const PanelDataset& data, double tau = 0.90);

double gpd_log_likelihood(std::span<const double> exceedances, double sigma, double xi);

struct GpdFit {
  double sigma = 0.0;
  double xi = 0.0;
  double se_sigma = 0.0;
  double se_xi = 0.0;
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;  // of the per-observation score in (log sigma, xi)
  int iterations = 0;
  bool at_boundary = false;
  std::size_t n = 0;
  /// Standard errors come from the observed information of the independence likelihood.
  std::string note = "independence likelihood - underestimates uncertainty";
};

/// Lower and upper bounds of the xi search box.
inline constexpr double kXiMin = -0.5;
inline constexpr double kXiMax = 1.0;

/// Maximizes the GPD independence likelihood over sigma > 0, xi in (-0.5, 1) by a
/// projected Newton iteration in (log sigma, xi) from the method-of-moments start.
/// Throws DomainError for fewer than 30 exceedances or non-positive values,
/// EstimationError when all values are equal or after 500 iterations.
GpdFit fit_gpd_mle(std::span<const double> exceedances);

/// Exceedances y - mu(site) > 0 pooled over the panel.
std::vector<double> pooled_exceedances(const PanelDataset& data, std::span<const double> mu);

}  // namespace scalemix
