#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "scalemix/errors.hpp"
#include "scalemix/marginal.hpp"
#include "scalemix/stats.hpp"
#include "scalemix/tail_stats.hpp"
#include "test_util.hpp"

using namespace scalemix;

namespace {

MarginalSpec spec1(double sigma, double xi, double mu = 10.0) { return {0.9, {mu}, sigma, xi}; }

std::vector<double> gpd_sample(std::size_t n, double sigma, double xi, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> y(n);
  for (auto& v : y) {
    const double u = rng.uniform();
    v = std::abs(xi) < 1e-12 ? -sigma * std::log(u) : sigma * (std::pow(u, -xi) - 1.0) / xi;
  }
  return y;
}

}  // namespace

TEST(UniformToData, Examples) {
  EXPECT_DOUBLE_EQ(uniform_to_data(0.9, spec1(1.0, 0.0), 0), 10.0);
  EXPECT_DOUBLE_EQ(uniform_to_data(0.3, spec1(1.0, 0.0), 0), 10.0);
  EXPECT_NEAR(uniform_to_data(0.99, spec1(1.0, 0.0), 0), 10.0 + 2.302585092994046, 1e-12);
  EXPECT_NEAR(uniform_to_data(0.99, spec1(46.34, 0.114), 0), 10.0 + 122.01630040405851, 1e-9);
  EXPECT_THROW(uniform_to_data(1.0, spec1(1.0, 0.0), 0), DomainError);
  EXPECT_THROW(uniform_to_data(1.5, spec1(1.0, 0.0), 0), DomainError);
}

TEST(DataToUniform, Examples) {
  EXPECT_DOUBLE_EQ(data_to_uniform(10.0, spec1(1.0, 0.0), 0), 0.9);
  EXPECT_DOUBLE_EQ(data_to_uniform(3.0, spec1(1.0, 0.0), 0), 0.9);
  EXPECT_NEAR(data_to_uniform(10.0 + 122.01630040405851, spec1(46.34, 0.114), 0), 0.99, 1e-12);
  // xi < 0: upper endpoint mu - sigma / xi
  EXPECT_NEAR(data_to_uniform(10.0 + 20.0 - 1e-9, spec1(5.0, -0.25), 0), 1.0, 1e-6);
  EXPECT_THROW(data_to_uniform(10.0 + 21.0, spec1(5.0, -0.25), 0), DomainError);
}

TEST(UniformToData, MonotoneAndInverse) {
  for (double xi : {-0.3, 0.0, 1e-10, 0.114, 0.6}) {
    const auto s = spec1(4.0, xi);
    double prev = -std::numeric_limits<double>::infinity();
    for (double u = 0.005; u < 1.0; u += 0.005) {
      const double y = uniform_to_data(u, s, 0);
      if (u > 0.9)
        EXPECT_GT(y, prev);
      else
        EXPECT_GE(y, prev);
      prev = y;
      if (u > 0.9) EXPECT_NEAR(data_to_uniform(y, s, 0), u, 1e-10);
    }
  }
}

TEST(MarginalSpec, Validation) {
  EXPECT_THROW((MarginalSpec{0.9, {1.0}, -1.0, 0.1}).validate(), DomainError);
  EXPECT_THROW((MarginalSpec{1.0, {1.0}, 1.0, 0.1}).validate(), DomainError);
  EXPECT_NO_THROW((MarginalSpec{0.9, {1.0}, 1.0, 0.1}).validate());
}

TEST(ToDataScale, CensoringMass) {
  const auto sites = tu::line_sites(5, 3.0);
  const auto uni = tu::independent_panel(sites, 40, 100, 31);
  const MarginalSpec m{0.9, {5, 6, 7, 8, 9}, 2.0, 0.1};
  const auto data = to_data_scale(uni, m);
  EXPECT_EQ(data.scale(), ValueScale::Data);
  std::size_t at_mu = 0, total = 0;
  for (std::size_t s = 0; s < 5; ++s)
    for (double v : data.site_series(s)) {
      at_mu += v == m.mu[s];
      ++total;
    }
  const double frac = static_cast<double>(at_mu) / static_cast<double>(total);
  EXPECT_NEAR(frac, 0.9, 3.0 * std::sqrt(0.09 / static_cast<double>(total)));
}

TEST(ToDataScale, PreservesChiAboveP) {
  const auto sites = tu::line_sites(3, 5.0);
  RandomStream rng(8);
  // dependent pair via a shared component
  const auto uni = tu::make_panel(sites, 10, 80, [&](std::size_t, std::size_t, std::size_t s) {
    return s == 2 ? rng.uniform() : 0.0;
  });
  PanelDataset dep = uni;
  for (std::size_t y = 0; y < 10; ++y)
    for (std::size_t d = 0; d < 80; ++d) {
      const double a = rng.uniform(), b = rng.uniform();
      dep.set(y, d, 0, std::max(a, b));
      dep.set(y, d, 1, std::max(a, rng.uniform()));
    }
  const auto data = to_data_scale(dep, MarginalSpec{0.9, {3, 4, 5}, 10.0, 0.2});
  for (double u : {0.92, 0.95, 0.99})
    for (int lag : {0, 1, 3}) {
      const auto a = empirical_chi_pair(dep, 0, 1, lag, u), b = empirical_chi_pair(data, 0, 1, lag, u);
      EXPECT_EQ(a.chi_hat, b.chi_hat) << u << " " << lag;
    }
}

TEST(QuantileRegression, ConstantData) {
  std::vector<Point2> x;
  std::vector<double> y;
  for (int i = 0; i < 50; ++i) {
    x.push_back({static_cast<double>(i % 7), static_cast<double>((i * 3) % 5)});
    y.push_back(4.25);
  }
  const auto f = fit_quantile_regression(y, x, 0.9);
  for (const auto& p : x) EXPECT_NEAR(f.predict(p), 4.25, 1e-6);
}

TEST(QuantileRegression, SingleSiteIsEmpiricalQuantile) {
  RandomStream rng(2);
  std::vector<double> y(501);
  for (auto& v : y) v = rng.normal();
  std::vector<Point2> x(y.size(), Point2{3.0, 4.0});
  const auto f = fit_quantile_regression(y, x, 0.9);
  EXPECT_TRUE(f.intercept_only);
  EXPECT_DOUBLE_EQ(f.predict({3.0, 4.0}), empirical_quantile(y, 0.9));
}

TEST(QuantileRegression, RecoversPlane) {
  RandomStream rng(5);
  const std::size_t n = 10000;
  std::vector<Point2> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = {rng.uniform(), rng.uniform()};
    y[i] = 1.0 + 2.0 * x[i].x + 3.0 * x[i].y + rng.uniform();
  }
  const double tau = 0.9;
  const auto f = fit_quantile_regression(y, x, tau);
  EXPECT_NEAR(f.coefficients[1], 2.0, 0.05);
  EXPECT_NEAR(f.coefficients[2], 3.0, 0.05);
  EXPECT_NEAR(f.coefficients[0], 1.9, 0.05);

  auto loss = [&](double b0, double b1, double b2) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += pinball(y[i] - (b0 + b1 * x[i].x + b2 * x[i].y), tau);
    return s;
  };
  // brute-force grid around the truth; the fit must do at least as well as its best point
  double best = std::numeric_limits<double>::infinity();
  for (double b0 = 1.8; b0 <= 2.0 + 1e-9; b0 += 0.02)
    for (double b1 = 1.9; b1 <= 2.1 + 1e-9; b1 += 0.02)
      for (double b2 = 2.9; b2 <= 3.1 + 1e-9; b2 += 0.02) best = std::min(best, loss(b0, b1, b2));
  const double at_fit = loss(f.coefficients[0], f.coefficients[1], f.coefficients[2]);
  EXPECT_LE(at_fit, best + 1e-6 * best);
  // and beats perturbations of itself
  for (int k = 0; k < 3; ++k)
    for (double e : {-0.01, 0.01}) {
      auto c = f.coefficients;
      c[static_cast<std::size_t>(k)] += e;
      EXPECT_LE(at_fit, loss(c[0], c[1], c[2]) + 1e-9);
    }
}

TEST(QuantileRegression, CollinearSitesRejected) {
  std::vector<Point2> x;
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    x.push_back({static_cast<double>(i % 3), 2.0 * static_cast<double>(i % 3)});
    y.push_back(static_cast<double>(i));
  }
  EXPECT_THROW(fit_quantile_regression(y, x, 0.9), LayoutError);
}

TEST(GpdMle, ExponentialRecovery) {
  const auto y = gpd_sample(100000, 10.0, 0.0, 41);
  const auto f = fit_gpd_mle(y);
  EXPECT_NEAR(f.sigma, 10.0, 0.15);
  EXPECT_NEAR(f.xi, 0.0, 0.02);
  EXPECT_GE(f.log_likelihood, gpd_log_likelihood(y, 10.0, 0.0));
  EXPECT_LT(f.gradient_norm, 1e-6);
  EXPECT_FALSE(f.at_boundary);
  EXPECT_EQ(f.n, y.size());
}

TEST(GpdMle, HeavyTailRecoveryAndStandardErrors) {
  const auto y = gpd_sample(50000, 46.34, 0.114, 42);
  const auto f = fit_gpd_mle(y);
  EXPECT_NEAR(f.sigma, 46.34, 4.0 * f.se_sigma);
  EXPECT_NEAR(f.xi, 0.114, 4.0 * f.se_xi);
  EXPECT_GT(f.se_sigma, 0.0);
  EXPECT_GT(f.se_xi, 0.0);
  EXPECT_LT(f.gradient_norm, 1e-6);
}

TEST(GpdMle, ScaleEquivariance) {
  auto y = gpd_sample(3000, 3.0, 0.2, 43);
  const auto a = fit_gpd_mle(y);
  for (auto& v : y) v *= 7.5;
  const auto b = fit_gpd_mle(y);
  EXPECT_NEAR(b.sigma, 7.5 * a.sigma, 1e-5 * b.sigma);
  EXPECT_NEAR(b.xi, a.xi, 1e-6);
}

TEST(GpdMle, Errors) {
  EXPECT_THROW(fit_gpd_mle(gpd_sample(20, 1.0, 0.1, 1)), DomainError);
  std::vector<double> eq(100, 2.0);
  EXPECT_THROW(fit_gpd_mle(eq), EstimationError);
  auto neg = gpd_sample(100, 1.0, 0.1, 1);
  neg[3] = -1.0;
  EXPECT_THROW(fit_gpd_mle(neg), DomainError);
}

TEST(GpdLogLikelihood, MatchesClosedForm) {
  const std::vector<double> y{0.5, 1.0, 2.5};
  double ll = 0.0;
  for (double v : y) ll += -std::log(2.0) - (1.0 / 0.3 + 1.0) * std::log1p(0.3 * v / 2.0);
  EXPECT_NEAR(gpd_log_likelihood(y, 2.0, 0.3), ll, 1e-12);
  double ll0 = 0.0;
  for (double v : y) ll0 += -std::log(2.0) - v / 2.0;
  EXPECT_NEAR(gpd_log_likelihood(y, 2.0, 0.0), ll0, 1e-12);
}

TEST(PooledExceedances, OnlyAboveThreshold) {
  const auto sites = tu::line_sites(2, 1.0);
  PanelDataset p(sites, 1, 4, ValueScale::Data);
  const std::vector<double> vals{1, 5, 3, 9, 2, 2, 8, 0};
  for (std::size_t d = 0; d < 4; ++d) {
    p.set(0, d, 0, vals[d]);
    p.set(0, d, 1, vals[4 + d]);
  }
  const std::vector<double> mu{3.0, 2.0};
  auto e = pooled_exceedances(p, mu);
  std::sort(e.begin(), e.end());
  EXPECT_EQ(e, (std::vector<double>{2.0, 6.0, 6.0}));
}
