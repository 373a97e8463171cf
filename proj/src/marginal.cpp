#include "scalemix/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "scalemix/errors.hpp"
#include "scalemix/stats.hpp"

namespace scalemix {

void MarginalSpec::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("marginal: p must lie in (0, 1)");
  if (!(sigma > 0.0)) throw DomainError("marginal: sigma must be positive");
  if (!std::isfinite(xi)) throw DomainError("marginal: xi must be finite");
}

double uniform_to_data(double u, const MarginalSpec& spec, std::size_t site) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("uniform_to_data: u must lie in (0, 1)");
  const double mu = spec.mu.at(site);
  if (u <= spec.p) return mu;
  const double tail = (1.0 - u) / (1.0 - spec.p);
  if (std::abs(spec.xi) < kXiZero) return mu - spec.sigma * std::log(tail);
  return mu + spec.sigma * std::expm1(-spec.xi * std::log(tail)) / spec.xi;
}

double data_to_uniform(double y, const MarginalSpec& spec, std::size_t site) {
  if (!std::isfinite(y)) throw DomainError("data_to_uniform: non-finite value");
  const double mu = spec.mu.at(site);
  if (y <= mu) return spec.p;
  const double z = (y - mu) / spec.sigma;
  double survival;
  if (std::abs(spec.xi) < kXiZero) {
    survival = std::exp(-z);
  } else {
    const double base = 1.0 + spec.xi * z;
    if (base <= 0.0) throw DomainError("data_to_uniform: value beyond the GPD upper endpoint");
    survival = std::exp(-std::log1p(spec.xi * z) / spec.xi);
  }
  return spec.p + (1.0 - spec.p) * (1.0 - survival);
}

PanelDataset to_data_scale(const PanelDataset& uniform, const MarginalSpec& spec) {
  if (spec.mu.size() != uniform.n_sites()) throw ShapeError("to_data_scale: one threshold per site required");
  PanelDataset out = uniform;
  out.set_scale(ValueScale::Data);
  for (std::size_t s = 0; s < out.n_sites(); ++s)
    for (std::size_t y = 0; y < out.n_years(); ++y)
      for (std::size_t d = 0; d < out.n_days(); ++d)
        if (out.observed(y, d, s)) {
          // Exactly-1 values come from survival underflow; keep them finite.
          const double u = std::min(uniform.value(y, d, s), std::nextafter(1.0, 0.0));
          out.set(y, d, s, uniform_to_data(std::max(u, std::numeric_limits<double>::min()), spec, s));
        }
  return out;
}

QuantileRegressionFit fit_quantile_regression(std::span<const double> y, std::span<const Point2> x, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile regression: tau must lie in (0, 1)");
  if (y.size() != x.size() || y.empty()) throw ShapeError("quantile regression: response and covariates differ");
  for (double v : y)
    if (!std::isfinite(v)) throw DomainError("quantile regression: non-finite observation");

  QuantileRegressionFit fit;
  fit.tau = tau;
  const bool one_site = std::all_of(x.begin(), x.end(), [&](const Point2& p) { return p.x == x[0].x && p.y == x[0].y; });
  if (one_site) {
    fit.intercept_only = true;
    fit.coefficients = {empirical_quantile(y, tau), 0.0, 0.0};
    for (double v : y) fit.loss += pinball(v - fit.coefficients[0], tau);
    return fit;
  }

  // Centre and scale the covariates for conditioning.
  const auto n = static_cast<Eigen::Index>(y.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : x) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sx = 0.0, sy = 0.0;
  for (const auto& p : x) {
    sx = std::max(sx, std::abs(p.x - mx));
    sy = std::max(sy, std::abs(p.y - my));
  }
  sx = sx > 0.0 ? sx : 1.0;
  sy = sy > 0.0 ? sy : 1.0;
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd resp(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = (x[static_cast<std::size_t>(i)].x - mx) / sx;
    design(i, 2) = (x[static_cast<std::size_t>(i)].y - my) / sy;
    resp(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Matrix3d gram = design.transpose() * design;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> spectrum(gram, Eigen::EigenvaluesOnly);
  const Eigen::Vector3d ev = spectrum.eigenvalues();
  if (ev(0) <= 1e-10 * ev(2))
    throw LayoutError("quantile regression: site coordinates are collinear (rank-deficient design)");

  auto total_loss = [&](const Eigen::Vector3d& b) {
    const Eigen::VectorXd r = resp - design * b;
    double l = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) l += pinball(r(i), tau);
    return l;
  };

  Eigen::Vector3d beta = gram.ldlt().solve(design.transpose() * resp);
  double loss = total_loss(beta);
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) scale += std::abs(resp(i));
  scale = scale / static_cast<double>(n) + 1.0;
  const double eps = 1e-9 * scale;
  int it = 0;
  for (; it < 5000 && loss > 0.0; ++it) {
    const Eigen::VectorXd r = resp - design * beta;
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = 1.0 / (eps + std::abs(r(i)));
      const Eigen::Vector3d xi = design.row(i).transpose();
      a.noalias() += w * xi * xi.transpose();
      b.noalias() += xi * (w * resp(i) + (2.0 * tau - 1.0));
    }
    const Eigen::Vector3d next = a.ldlt().solve(b);
    const double next_loss = total_loss(next);
    const double change = std::abs(loss - next_loss);
    beta = next;
    const double prev = loss;
    loss = next_loss;
    if (change <= 1e-8 * std::max(prev, std::numeric_limits<double>::min())) {
      ++it;
      break;
    }
  }
  fit.iterations = it;
  fit.loss = loss;
  fit.coefficients = {beta(0) - beta(1) * mx / sx - beta(2) * my / sy, beta(1) / sx, beta(2) / sy};
  return fit;
}

QuantileRegressionFit fit_threshold_qr(const PanelDataset& data, double tau) {
  std::vector<double> y;
  std::vector<Point2> x;
  y.reserve(data.raw_values().size());
  x.reserve(data.raw_values().size());
  std::size_t sites_with_data = 0;
  for (std::size_t s = 0; s < data.n_sites(); ++s) {
    const auto series = data.site_series(s);
    const auto mask = data.site_mask(s);
    std::size_t count = 0;
    for (std::size_t k = 0; k < series.size(); ++k)
      if (mask[k]) {
        y.push_back(series[k]);
        x.push_back(data.sites()[s].coord);
        ++count;
      }
    sites_with_data += count > 0;
  }
  if (sites_with_data == 2) throw LayoutError("threshold regression needs one site or at least three non-collinear sites");
  QuantileRegressionFit fit = fit_quantile_regression(y, x, tau);
  fit.mu.reserve(data.n_sites());
  for (const auto& s : data.sites()) fit.mu.push_back(fit.predict(s.coord));
  return fit;
}

namespace {

constexpr double kSeriesCut = 1e-4;

struct GpdEval {
  double loglik = -std::numeric_limits<double>::infinity();
  double d_log_sigma = 0.0;
  double d_xi = 0.0;
  bool feasible = false;
};

// Log-likelihood and score in (log sigma, xi).
GpdEval evaluate(std::span<const double> e, double log_sigma, double xi) {
  GpdEval out;
  const double sigma = std::exp(log_sigma);
  const auto n = static_cast<double>(e.size());
  double sum_log = 0.0, sum_ratio = 0.0, sum_dxi = 0.0;
  for (double v : e) {
    const double y = v / sigma;
    const double t = xi * y;
    if (1.0 + t <= 0.0) return out;
    const double a = 1.0 + t;
    const double ratio = y / a;
    sum_ratio += ratio;
    double log_term;  // (1 + 1/xi) log(1 + xi y)
    double f;         // log(1 + xi y)/xi^2 - y/(xi (1 + xi y))
    if (std::abs(t) < kSeriesCut) {
      log_term = (1.0 + xi) * (y - 0.5 * xi * y * y + xi * xi * y * y * y / 3.0) ;
      f = 0.5 * y * y - (2.0 / 3.0) * xi * y * y * y + 0.75 * xi * xi * y * y * y * y;
    } else {
      const double l = std::log1p(t);
      log_term = (1.0 + 1.0 / xi) * l;
      f = l / (xi * xi) - y / (xi * a);
    }
    sum_log += log_term;
    sum_dxi += f - ratio;
  }
  out.loglik = -n * log_sigma - sum_log;
  out.d_log_sigma = -n + (1.0 + xi) * sum_ratio;
  out.d_xi = sum_dxi;
  out.feasible = true;
  return out;
}

}  // namespace

double gpd_log_likelihood(std::span<const double> exceedances, double sigma, double xi) {
  if (!(sigma > 0.0)) return -std::numeric_limits<double>::infinity();
  return evaluate(exceedances, std::log(sigma), xi).loglik;
}

GpdFit fit_gpd_mle(std::span<const double> e) {
  if (e.size() < 30) throw DomainError("fit_gpd_mle: at least 30 exceedances required");
  for (double v : e)
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("fit_gpd_mle: exceedances must be positive and finite");
  const auto [mn, mx] = std::minmax_element(e.begin(), e.end());
  if (*mx - *mn <= 1e-9 * *mx) throw EstimationError("fit_gpd_mle: all exceedances are equal (degenerate sample)");

  const auto n = static_cast<double>(e.size());
  const double mean = std::accumulate(e.begin(), e.end(), 0.0) / n;
  double var = 0.0;
  for (double v : e) var += (v - mean) * (v - mean);
  var /= n - 1.0;
  double xi = std::clamp(0.5 * (1.0 - mean * mean / var), -0.45, 0.9);
  double log_sigma = std::log(0.5 * mean * (mean * mean / var + 1.0));
  if (xi < 0.0) log_sigma = std::max(log_sigma, std::log(-xi * *mx * 1.01));

  constexpr double kLo = kXiMin + 1e-9, kHi = kXiMax - 1e-9;
  GpdFit fit;
  fit.n = e.size();
  GpdEval cur = evaluate(e, log_sigma, xi);
  if (!cur.feasible) throw EstimationError("fit_gpd_mle: infeasible starting point");

  auto hessian = [&](double ls, double x) {
    Eigen::Matrix2d h;
    const double hs = 1e-5, hx = 1e-5;
    const GpdEval sp = evaluate(e, ls + hs, x), sm = evaluate(e, ls - hs, x);
    const GpdEval xp = evaluate(e, ls, x + hx), xm = evaluate(e, ls, x - hx);
    h(0, 0) = (sp.d_log_sigma - sm.d_log_sigma) / (2 * hs);
    h(1, 1) = (xp.d_xi - xm.d_xi) / (2 * hx);
    h(0, 1) = h(1, 0) = 0.5 * ((sp.d_xi - sm.d_xi) / (2 * hs) + (xp.d_log_sigma - xm.d_log_sigma) / (2 * hx));
    return h;
  };

  int it = 0;
  for (; it < 500; ++it) {
    const Eigen::Vector2d g(cur.d_log_sigma, cur.d_xi);
    const double gnorm = g.norm() / n;
    const bool xi_pinned = (xi <= kLo && g(1) < 0.0) || (xi >= kHi && g(1) > 0.0);
    if (gnorm < 1e-10 || (xi_pinned && std::abs(g(0)) / n < 1e-10)) break;
    Eigen::Matrix2d h = hessian(log_sigma, xi);
    Eigen::Vector2d step;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(h);
    if (eig.eigenvalues().maxCoeff() < 0.0) {
      step = -h.ldlt().solve(g);
    } else {
      step = g / std::max(1.0, g.norm());
    }
    if (xi_pinned) step(1) = 0.0;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const double nls = log_sigma + t * step(0);
      const double nxi = std::clamp(xi + t * step(1), kLo, kHi);
      const GpdEval cand = evaluate(e, nls, nxi);
      if (cand.feasible && cand.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)) {
        moved = cand.loglik > cur.loglik || (nls == log_sigma && nxi == xi);
        log_sigma = nls;
        xi = nxi;
        cur = cand;
        break;
      }
    }
    if (!moved) break;
  }
  if (it >= 500) throw EstimationError("fit_gpd_mle: no convergence in 500 iterations");

  fit.iterations = it;
  fit.sigma = std::exp(log_sigma);
  fit.xi = xi;
  fit.log_likelihood = cur.loglik;
  fit.gradient_norm = Eigen::Vector2d(cur.d_log_sigma, cur.d_xi).norm() / n;
  fit.at_boundary = xi <= kLo + 1e-6 || xi >= kHi - 1e-6;
  // Observed information in (sigma, xi).
  Eigen::Matrix2d h = hessian(log_sigma, xi);
  Eigen::Matrix2d d = Eigen::Matrix2d::Identity();
  d(0, 0) = 1.0 / fit.sigma;
  Eigen::Matrix2d h_sx = d * h * d;
  h_sx(0, 0) -= cur.d_log_sigma / (fit.sigma * fit.sigma);  // chain-rule term, ~0 at optimum
  const Eigen::Matrix2d cov = (-h_sx).inverse();
  fit.se_sigma = cov(0, 0) > 0.0 ? std::sqrt(cov(0, 0)) : std::numeric_limits<double>::quiet_NaN();
  fit.se_xi = cov(1, 1) > 0.0 ? std::sqrt(cov(1, 1)) : std::numeric_limits<double>::quiet_NaN();
  return fit;
}

std::vector<double> pooled_exceedances(const PanelDataset& data, std::span<const double> mu) {
  if (mu.size() != data.n_sites()) throw ShapeError("pooled_exceedances: one threshold per site required");
  std::vector<double> out;
  for (std::size_t s = 0; s < data.n_sites(); ++s) {
    const auto series = data.site_series(s);
    const auto mask = data.site_mask(s);
    for (std::size_t k = 0; k < series.size(); ++k)
      if (mask[k] && series[k] > mu[s]) out.push_back(series[k] - mu[s]);
  }
  return out;
}

}  // namespace scalemix
