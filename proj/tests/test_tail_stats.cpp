#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "scalemix/copula.hpp"
#include "scalemix/errors.hpp"
#include "scalemix/stats.hpp"
#include "scalemix/tail_stats.hpp"
#include "test_util.hpp"

using namespace scalemix;
using tu::line_sites;
using tu::make_panel;
using tu::normal_cdf;

namespace {

// Bivariate-normal joint survival at u divided by 1 - u, by quadrature.
constexpr double kGaussChi05 = 0.32401523218343337;  // rho 0.5, u 0.9
constexpr double kGaussChi09 = 0.6886494037171532;   // rho 0.9, u 0.9

PanelDataset gaussian_pair(double rho, std::size_t n_days, std::uint64_t seed, std::size_t years = 1) {
  RandomStream rng(seed);
  PanelDataset p(line_sites(2, 10.0), years, n_days, ValueScale::Uniform);
  const double c = std::sqrt(1.0 - rho * rho);
  for (std::size_t y = 0; y < years; ++y)
    for (std::size_t d = 0; d < n_days; ++d) {
      const double z1 = rng.normal(), z2 = rho * z1 + c * rng.normal();
      p.set(y, d, 0, normal_cdf(z1));
      p.set(y, d, 1, normal_cdf(z2));
    }
  return p;
}

// Straightforward re-implementation used as an oracle.
double brute_chi(const PanelDataset& p, std::size_t a, std::size_t b, int lag, double u) {
  auto q = [&](std::size_t s) {
    std::vector<double> v;
    for (std::size_t y = 0; y < p.n_years(); ++y)
      for (std::size_t d = 0; d < p.n_days(); ++d)
        if (p.observed(y, d, s)) v.push_back(p.value(y, d, s));
    return empirical_quantile(v, u);
  };
  const double qa = q(a), qb = q(b);
  std::size_t joint = 0, valid = 0;
  for (std::size_t y = 0; y < p.n_years(); ++y)
    for (std::size_t d = 0; d + static_cast<std::size_t>(lag) < p.n_days(); ++d) {
      const std::size_t e = d + static_cast<std::size_t>(lag);
      if (!p.observed(y, d, a) || !p.observed(y, e, b)) continue;
      ++valid;
      joint += p.value(y, d, a) > qa && p.value(y, e, b) > qb;
    }
  return std::min(1.0, static_cast<double>(joint) / (static_cast<double>(valid) * (1.0 - u)));
}

}  // namespace

TEST(EmpiricalChi, Comonotone) {
  RandomStream rng(1);
  const auto p = make_panel(line_sites(2, 1.0), 4, 250, [&](std::size_t, std::size_t, std::size_t s) {
    static double last = 0.0;
    if (s == 0) last = rng.uniform();
    return last;
  });
  for (double u : {0.9, 0.95, 0.99}) {
    const auto c = empirical_chi_pair(p, 0, 1, 0, u);
    EXPECT_NEAR(c.chi_hat, 1.0, 1.0 / (1000.0 * (1.0 - u)));
    EXPECT_EQ(c.n_effective, 1000u);
  }
}

TEST(EmpiricalChi, IndependentSeries) {
  const auto p = tu::independent_panel(line_sites(2, 1.0), 10, 1000, 3);
  const auto c = empirical_chi_pair(p, 0, 1, 0, 0.9);
  const double se = std::sqrt(0.01 * 0.99 / 1e4) / 0.1;
  EXPECT_NEAR(c.chi_hat, 0.1, 3.0 * se);
}

TEST(EmpiricalChi, GaussianQuadratureOracle) {
  const auto p = gaussian_pair(0.5, 1000000, 7);
  const auto c = empirical_chi_pair(p, 0, 1, 0, 0.9);
  const double pj = kGaussChi05 * 0.1;
  EXPECT_NEAR(c.chi_hat, kGaussChi05, 3.0 * std::sqrt(pj * (1 - pj) / 1e6) / 0.1);
}

TEST(EmpiricalChi, UnclippedMeanOverTrials) {
  for (auto [rho, target] : {std::pair{0.0, 0.1}, std::pair{0.5, kGaussChi05}, std::pair{0.9, kGaussChi09}}) {
    std::vector<double> est;
    for (std::uint64_t t = 0; t < 40; ++t) est.push_back(empirical_chi_pair(gaussian_pair(rho, 20000, 100 + t), 0, 1, 0, 0.9).chi_unclipped);
    const double m = std::accumulate(est.begin(), est.end(), 0.0) / static_cast<double>(est.size());
    double v = 0.0;
    for (double e : est) v += (e - m) * (e - m);
    const double se = std::sqrt(v / static_cast<double>(est.size() - 1) / static_cast<double>(est.size()));
    EXPECT_NEAR(m, target, 3.0 * se + 1e-4) << "rho " << rho;
  }
}

TEST(EmpiricalChi, GaussianEtaSlope) {
  const double rho = 0.5, eta = (1.0 + rho) / 2.0;
  const auto p = gaussian_pair(rho, 4000000, 9);
  std::vector<double> lx, ly;
  for (double u : {0.9, 0.95, 0.98, 0.99, 0.995, 0.999}) {
    lx.push_back(std::log(1.0 - u));
    ly.push_back(std::log(empirical_chi_pair(p, 0, 1, 0, u).chi_hat));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / 6.0, my = std::accumulate(ly.begin(), ly.end(), 0.0) / 6.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, 1.0 / eta - 1.0, 0.15);
}

TEST(EmpiricalChi, MatchesBruteForceWithMissing) {
  auto p = tu::independent_panel(line_sites(3, 2.0), 6, 40, 12);
  RandomStream rng(13);
  for (int i = 0; i < 60; ++i)
    p.set_missing(static_cast<std::size_t>(rng.uniform() * 6), static_cast<std::size_t>(rng.uniform() * 40),
                  static_cast<std::size_t>(rng.uniform() * 3));
  for (int lag : {0, 1, 5})
    for (double u : {0.8, 0.9}) {
      EXPECT_DOUBLE_EQ(empirical_chi_pair(p, 0, 2, lag, u).chi_hat, brute_chi(p, 0, 2, lag, u));
      EXPECT_DOUBLE_EQ(empirical_chi_pair(p, 2, 1, lag, u).chi_hat, brute_chi(p, 2, 1, lag, u));
    }
}

TEST(EmpiricalChi, NeverPairsAcrossYears) {
  // site 0 is extreme on the last day of each year and site 1 on the first;
  // pairing across the year boundary would give lag-1 joint exceedances every year.
  const std::size_t years = 50, days = 20;
  RandomStream rng(14);
  const auto p = make_panel(line_sites(2, 3.0), years, days, [&](std::size_t, std::size_t d, std::size_t s) {
    if (s == 0 && d == days - 1) return 0.999 + 1e-4 * rng.uniform();
    if (s == 1 && d == 0) return 0.999 + 1e-4 * rng.uniform();
    return 0.9 * rng.uniform();
  });
  const auto c = empirical_chi_pair(p, 0, 1, 1, 0.95);
  EXPECT_EQ(c.n_effective, years * (days - 1));
  EXPECT_EQ(c.chi_hat, 0.0);
  EXPECT_DOUBLE_EQ(c.chi_hat, brute_chi(p, 0, 1, 1, 0.95));
}

TEST(EmpiricalChi, EmptyLagSignal) {
  const auto p = tu::independent_panel(line_sites(2, 3.0), 4, 6, 1);
  const auto c = empirical_chi_pair(p, 0, 1, 6, 0.9);
  EXPECT_EQ(c.n_effective, 0u);
  EXPECT_TRUE(std::isnan(c.chi_hat));
}

TEST(DistanceBins, LeftClosed) {
  const std::vector<double> e{0.0, 1.0, 2.0, 4.0};
  EXPECT_EQ(distance_bin(e, 0.0), 0u);
  EXPECT_EQ(distance_bin(e, 1.0), 1u);
  EXPECT_EQ(distance_bin(e, 3.999), 2u);
  EXPECT_FALSE(distance_bin(e, 4.0).has_value());
  EXPECT_FALSE(distance_bin(e, -0.1).has_value());
}

TEST(DistanceBins, DefaultEdges) {
  std::vector<Point2> pts{{0, 0}, {30, 40}, {10, 0}};
  const auto e = default_distance_edges(pts, 8);
  ASSERT_EQ(e.size(), 9u);
  EXPECT_DOUBLE_EQ(e.front(), 0.0);
  EXPECT_DOUBLE_EQ(e.back(), 25.0);
  for (std::size_t i = 1; i < e.size(); ++i) EXPECT_GT(e[i], e[i - 1]);
}

TEST(ChiGrid, ParallelEqualsSerial) {
  const auto sites = province_like_sites(12);
  auto p = simulate_copula({Variant::M1, 0.6, 0.9, 9.0, 0.5}, sites, 30, 8, 5);
  p.set_missing(2, 3, 4);
  p.set_missing(7, 29, 0);
  GridConfig cfg;
  const auto a = chi_grid(p, cfg), b = chi_grid_serial(p, cfg);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.values.size(), 3u * 8u * 8u);
  for (double v : a.values)
    if (!std::isnan(v)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
}

TEST(ChiGrid, CellsAreBinAverages) {
  const auto sites = province_like_sites(8);
  const auto p = simulate_copula({Variant::M3, 0.6, 0.9, 9.0, 0.5}, sites, 25, 6, 6);
  GridConfig cfg;
  cfg.lags = {0, 2};
  const auto g = chi_grid(p, cfg);
  const auto pts = p.coordinates();
  for (std::size_t k = 0; k < 2; ++k) {
    const int lag = cfg.lags[k];
    std::vector<double> sum(g.m1(), 0.0);
    std::vector<std::size_t> cnt(g.m1(), 0);
    for (std::size_t i = 0; i < sites.size(); ++i)
      for (std::size_t j = i + 1; j < sites.size(); ++j) {
        const auto bin = distance_bin(g.dist_edges, distance(pts[i], pts[j]));
        if (!bin) continue;
        const double c = lag == 0 ? brute_chi(p, i, j, 0, 0.95)
                                  : 0.5 * (brute_chi(p, i, j, lag, 0.95) + brute_chi(p, j, i, lag, 0.95));
        sum[*bin] += c;
        ++cnt[*bin];
      }
    for (std::size_t b = 0; b < g.m1(); ++b) {
      EXPECT_EQ(g.n_pairs[g.cell(1, b, k)], cnt[b]);
      if (cnt[b] == 0)
        EXPECT_TRUE(std::isnan(g.at(1, b, k)));
      else
        EXPECT_NEAR(g.at(1, b, k), sum[b] / static_cast<double>(cnt[b]), 1e-12);
    }
  }
}

TEST(ChiGrid, PermutationInvariant) {
  const auto sites = province_like_sites(10);
  const auto p = simulate_copula({Variant::M1, 0.55, 0.9, 9.0, 0.5}, sites, 30, 6, 8);
  std::vector<std::size_t> perm{3, 7, 0, 9, 1, 5, 2, 8, 6, 4};
  const auto q = p.select_sites(perm);
  GridConfig cfg;
  const auto a = chi_grid(p, cfg), b = chi_grid(q, cfg);
  ASSERT_EQ(a.values.size(), b.values.size());
  EXPECT_EQ(a.dist_edges, b.dist_edges);
  EXPECT_EQ(a.n_pairs, b.n_pairs);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (std::isnan(a.values[i]))
      EXPECT_TRUE(std::isnan(b.values[i]));
    else
      EXPECT_NEAR(a.values[i], b.values[i], 1e-12);
  }
}

TEST(ChiGrid, DeltaOneLagZeroIsOne) {
  const auto sites = province_like_sites(10);
  const auto p = simulate_copula({Variant::M2, 1.0, 0.9, 9.0, 0.5}, sites, 50, 10, 9);
  const auto g = chi_grid(p, GridConfig{});
  for (std::size_t l = 0; l < g.n_levels(); ++l)
    for (std::size_t b = 0; b < g.m1(); ++b) {
      const double v = g.at(l, b, 0);
      if (!std::isnan(v)) EXPECT_NEAR(v, 1.0, 1.0 / (500.0 * (1.0 - g.u_levels[l])));
    }
}

TEST(ChiGrid, JsonRoundTripAndCsv) {
  const auto sites = province_like_sites(6);
  const auto p = simulate_copula({Variant::M1, 0.6, 0.9, 9.0, 0.5}, sites, 20, 4, 10);
  const auto g = chi_grid(p, GridConfig{});
  EXPECT_GT(g.empty_cells(), 0u);
  const auto r = chi_grid_from_json(nlohmann::json::parse(chi_grid_to_json(g).dump()));
  EXPECT_TRUE(r == g);
  std::ostringstream csv;
  write_chi_grid_csv(csv, g);
  const std::string s = csv.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "level,u,dist_lo,dist_hi,lag,chi,n_pairs");
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), 1 + g.values.size());
  EXPECT_NE(s.find("nan"), std::string::npos);
}

TEST(GridConfig, Validation) {
  GridConfig c;
  c.u_levels = {0.9, 1.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = GridConfig{};
  c.lags = {0, 0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = GridConfig{};
  c.dist_edges = {0.0, 2.0, 1.0};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ChiStar, ComonotoneAndIndependent) {
  const auto sites = province_like_sites(8);
  RandomStream rng(4);
  std::vector<double> day(8 * 600);
  for (auto& v : day) v = rng.uniform();
  const auto como = make_panel(sites, 8, 600, [&](std::size_t y, std::size_t d, std::size_t) { return day[y * 600 + d]; });
  EXPECT_NEAR(chi_star(como, 0, 0, 0.9), 1.0, 1e-12);
  EXPECT_NEAR(chi_star(como, 3, 1, 0.9), 0.1, 0.03);  // lag 1: independent days, comonotone sites

  const auto ind = tu::independent_panel(sites, 400, 500, 5);
  const double c = chi_star(ind, 2, 0, 0.9);
  // binomial SE given ~20000 conditioning events
  EXPECT_NEAR(c, 1e-4, 3.0 * std::sqrt(1e-4 / 20000.0));
}

TEST(ChiStar, NeedsFiveSites) {
  const auto p = tu::independent_panel(line_sites(4, 1.0), 2, 50, 1);
  EXPECT_THROW(chi_star(p, 0, 0, 0.9), ConfigError);
}

TEST(NearestNeighbours, OrderAndTies) {
  std::vector<Point2> pts{{0, 0}, {1, 0}, {0, 1}, {-1, 0}, {5, 5}, {0, -2}};
  EXPECT_EQ(nearest_neighbours(pts, 0, 4), (std::vector<std::size_t>{1, 2, 3, 5}));
}

TEST(RmseChiStar, Examples) {
  const std::vector<double> emp{0.3, 0.5, 0.2};
  EXPECT_DOUBLE_EQ(rmse_chi_star(emp, {emp, emp, emp}).mean, 0.0);
  std::vector<std::vector<double>> draws;
  for (int j = 0; j < 6; ++j) {
    std::vector<double> d = emp;
    for (auto& v : d) v += j % 2 ? 0.1 : -0.1;
    draws.push_back(d);
  }
  const auto r = rmse_chi_star(emp, draws);
  EXPECT_NEAR(r.mean, 0.1, 1e-12);
  for (double v : r.per_site) EXPECT_NEAR(v, 0.1, 1e-12);
}

TEST(VerifyClasses, BudgetCheck) {
  ClassCheckConfig c;
  c.n_replicates = 100000;
  const std::vector<DependenceMode> modes{DependenceMode::Space};
  EXPECT_THROW(verify_dependence_class({Variant::M1, 0.7}, modes, c), ConfigError);
}

TEST(VerifyClasses, SmallBudgetRuns) {
  ClassCheckConfig c;
  c.n_replicates = 200000;
  c.u_levels = {0.9, 0.95, 0.99};
  const std::vector<DependenceMode> modes{DependenceMode::Space, DependenceMode::Time, DependenceMode::SpaceTime};
  const auto r = verify_dependence_class({Variant::M4, 0.3, 1.0, 10.0, 1.0}, modes, c);
  ASSERT_EQ(r.checks.size(), 3u);
  for (const auto& ch : r.checks) {
    EXPECT_EQ(ch.expected, DepKind::AD);
    EXPECT_EQ(ch.chi.size(), 3u);
    for (double v : ch.chi) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  const auto j = class_report_to_json(r);
  EXPECT_EQ(j["checks"].size(), 3u);
  EXPECT_EQ(dependence_mode_from_string("spacetime"), DependenceMode::SpaceTime);
}
