#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "scalemix/copula.hpp"
#include "scalemix/errors.hpp"
#include "test_util.hpp"

using namespace scalemix;

namespace {

double ks_distance(std::vector<double> v, const std::function<double(double)>& cdf) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

std::vector<Point2> coords(std::size_t n) {
  std::vector<Point2> p;
  for (const auto& s : tu::line_sites(n, 7.0)) p.push_back(s.coord);
  return p;
}

}  // namespace

TEST(MarginalCdf, Examples) {
  for (double d : {0.0, 0.2, 0.5, 0.8, 1.0}) EXPECT_NEAR(marginal_cdf(1.0, d), 0.0, 1e-15);
  EXPECT_NEAR(marginal_cdf(std::exp(1.0), 0.5), 1.0 - 3.0 * std::exp(-2.0), 1e-12);
  // Values below come from numerical integration of the hypoexponential density.
  EXPECT_NEAR(marginal_cdf(2.0, 0.3), 0.42428692281359437, 1e-10);
  EXPECT_NEAR(marginal_cdf(5.0, 0.2), 0.8217759186729542, 1e-10);
  EXPECT_THROW(marginal_cdf(0.5, 0.3), DomainError);
}

TEST(MarginalCdf, BruteForceOracle) {
  RandomStream rng(99);
  const int n = 10000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const double r = 1.0 / rng.uniform(), w = 1.0 / rng.uniform();
    hits += std::pow(r, 0.3) * std::pow(w, 0.7) <= 2.0;
  }
  EXPECT_NEAR(static_cast<double>(hits) / n, marginal_cdf(2.0, 0.3), 0.001);
}

TEST(MarginalCdf, Properties) {
  for (int i = 1; i <= 9; ++i) {
    const double d = 0.1 * i;
    double prev = 0.0;
    for (double x = 1.0; x < 200.0; x *= 1.07) {
      const double g = marginal_cdf(x, d);
      EXPECT_GE(g, prev);
      EXPECT_LT(g, 1.0);
      // symmetric in delta <-> 1 - delta
      EXPECT_NEAR(g, marginal_cdf(x, 1.0 - d), 1e-10);
      prev = g;
    }
    EXPECT_GT(marginal_cdf(1e6, d), 1.0 - 1e-4);
  }
  for (double x = 1.0; x <= 100.0; x += 0.5) {
    EXPECT_LT(std::abs(marginal_cdf(x, 0.5 + 1e-4) - marginal_cdf(x, 0.5)), 1e-3);
    EXPECT_LT(std::abs(marginal_cdf(x, 0.5 - 1e-4) - marginal_cdf(x, 0.5)), 1e-3);
  }
}

TEST(MarginalCdf, SurvivalFromLog) {
  for (double d : {0.25, 0.5, 0.7})
    for (double x : {1.5, 10.0, 300.0}) EXPECT_NEAR(marginal_survival_log(std::log(x), d), 1.0 - marginal_cdf(x, d), 1e-12);
}

TEST(MarginalQuantile, Inverse) {
  EXPECT_DOUBLE_EQ(marginal_quantile(0.0, 0.3), 1.0);
  EXPECT_NEAR(marginal_quantile(0.5939941502901619, 0.5), std::exp(1.0), 1e-8);
  for (double d : {0.05, 0.3, 0.5, 0.5 + 5e-7, 0.77, 0.95})
    for (double u : {1e-6, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-9}) EXPECT_NEAR(marginal_cdf(marginal_quantile(u, d), d), u, 1e-10);
}

TEST(Classification, Examples) {
  auto cls = [](Variant v, double d) { return classify_dependence({v, d}); };
  EXPECT_EQ(cls(Variant::M1, 0.7), (DependenceClass{DepKind::AD, DepKind::AI, DepKind::AI}));
  EXPECT_EQ(cls(Variant::M3, 0.4), (DependenceClass{DepKind::AI, DepKind::AI, DepKind::AI}));
  EXPECT_EQ(cls(Variant::M7, 0.7), (DependenceClass{DepKind::AI, DepKind::AD, DepKind::AI}));
}

TEST(Classification, FullTable) {
  using enum DepKind;
  struct Row {
    Variant v;
    DependenceClass above, at, below;
  };
  const std::vector<Row> rows{
      {Variant::M1, {AD, AI, AI}, {AD, AI, AI}, {AD, AD, AD}}, {Variant::M2, {AD, AD, AD}, {AI, AI, AI}, {AI, AI, AI}},
      {Variant::M3, {AD, AI, AI}, {AI, AI, AI}, {AI, AI, AI}}, {Variant::M4, {AD, AD, AD}, {AD, AD, AD}, {AD, AD, AD}},
      {Variant::M5, {AI, AD, AI}, {AI, AD, AI}, {AD, AD, AD}}, {Variant::M6, {AD, AD, AD}, {AI, AI, AI}, {AI, AI, AI}},
      {Variant::M7, {AI, AD, AI}, {AI, AI, AI}, {AI, AI, AI}}, {Variant::M8, {AD, AD, AD}, {AD, AD, AD}, {AD, AD, AD}}};
  for (const auto& r : rows) {
    EXPECT_EQ(classify_dependence({r.v, 0.8}), r.above) << to_string(r.v);
    EXPECT_EQ(classify_dependence({r.v, 0.5}), r.at) << to_string(r.v);
    EXPECT_EQ(classify_dependence({r.v, 0.5 + 1e-7}), r.at) << to_string(r.v);
    EXPECT_EQ(classify_dependence({r.v, 0.2}), r.below) << to_string(r.v);
  }
}

TEST(Variants, NamesAndProcesses) {
  for (int i = 1; i <= 8; ++i) {
    const Variant v = variant_from_int(i);
    EXPECT_EQ(variant_from_string(to_string(v)), v);
    EXPECT_EQ(variant_from_string(std::to_string(i)), v);
    EXPECT_EQ(indexes_r_by_space(v), i >= 5);
  }
  EXPECT_THROW(variant_from_string("M9"), ConfigError);
  EXPECT_EQ(r_process({Variant::M1}).kind, ProcessKind::Gaussian);
  EXPECT_EQ(w_process({Variant::M1}).kind, ProcessKind::StudentT);
  EXPECT_EQ(r_process({Variant::M3}).kind, ProcessKind::Gaussian);
  EXPECT_EQ(w_process({Variant::M3}).kind, ProcessKind::Gaussian);
  EXPECT_EQ(r_process({Variant::M4}).kind, ProcessKind::StudentT);
  EXPECT_EQ(w_process({Variant::M4}).kind, ProcessKind::StudentT);
}

TEST(CopulaSpec, Validation) {
  EXPECT_THROW((CopulaSpec{Variant::M1, 1.2}).validate(), DomainError);
  EXPECT_THROW((CopulaSpec{Variant::M1, -0.1}).validate(), DomainError);
  CopulaSpec s;
  s.psi1 = 0.0;
  EXPECT_THROW(s.validate(), DomainError);
  EXPECT_THROW(CopulaSimulator(s, coords(3), 5), DomainError);
}

TEST(CopulaSimulator, DeltaZeroIsPureW) {
  for (Variant v : {Variant::M1, Variant::M3, Variant::M6}) {
    const CopulaSimulator sim({v, 0.0, 0.8, 9.0, 0.5}, coords(6), 10);
    const RandomStream ys = year_stream(3, 0);
    std::vector<double> u(60), logw(60);
    sim.simulate_uniform(ys, u);
    sim.simulate_log_w(ys, logw);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(u[i], -std::expm1(-logw[i]), 1e-12);
  }
}

TEST(CopulaSimulator, DeltaOneIsCommonPerDay) {
  for (Variant v : {Variant::M1, Variant::M2, Variant::M3, Variant::M4}) {
    const std::size_t n = 5, T = 12;
    const CopulaSimulator sim({v, 1.0, 0.8, 9.0, 0.5}, coords(n), T);
    std::vector<double> u(n * T);
    sim.simulate_uniform(year_stream(4, 2), u);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t s = 1; s < n; ++s) EXPECT_EQ(u[s * T + t], u[t]);
  }
}

TEST(CopulaSimulator, LogFormMatchesDirect) {
  for (int vi = 1; vi <= 8; ++vi) {
    const CopulaSimulator sim({variant_from_int(vi), 0.37, 0.8, 9.0, 0.5}, coords(10), 20);
    std::vector<double> lx(200), x(200);
    const auto ys = year_stream(5, 1);
    const std::size_t c1 = sim.simulate_log_x(ys, lx);
    const std::size_t c2 = sim.simulate_x_direct(ys, x);
    ASSERT_EQ(c1, 0u);
    ASSERT_EQ(c2, 0u);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(std::exp(lx[i]), x[i], 1e-9 * x[i]);
  }
}

TEST(CopulaSimulator, HalfDeltaPointMarginal) {
  const CopulaSimulator sim({Variant::M1, 0.5, 1.0, 10.0, 1.0}, coords(1), 1);
  const int n = 1000000;
  std::vector<double> x(n);
  double buf = 0.0;
  for (int i = 0; i < n; ++i) {
    sim.simulate_x_direct(year_stream(17, static_cast<std::size_t>(i)), std::span<double>(&buf, 1));
    x[static_cast<std::size_t>(i)] = buf;
  }
  EXPECT_LT(ks_distance(std::move(x), [](double v) { return marginal_cdf(v, 0.5); }), 0.002);
}

TEST(CopulaSimulator, UniformMarginsPooled) {
  for (Variant v : {Variant::M1, Variant::M4, Variant::M7}) {
    const CopulaSimulator sim({v, 0.6, 0.9, 8.0, 0.7}, coords(3), 2);
    const int n = 100000;
    std::vector<double> u(n), buf(6);
    for (int i = 0; i < n; ++i) {
      sim.simulate_uniform(year_stream(23, static_cast<std::size_t>(i)), buf);
      u[static_cast<std::size_t>(i)] = buf[static_cast<std::size_t>(i) % 6];
    }
    // 1% critical value of the one-sample KS statistic
    EXPECT_LT(ks_distance(std::move(u), [](double t) { return t; }), 1.628 / std::sqrt(static_cast<double>(n)))
        << to_string(v);
  }
}

TEST(SimulateCopula, DeterministicAndYearIndependent) {
  const auto sites = tu::line_sites(4, 5.0);
  const CopulaSpec spec{Variant::M2, 0.4, 0.9, 8.0, 0.7};
  const auto a = simulate_copula(spec, sites, 6, 3, 12);
  const auto b = simulate_copula(spec, sites, 6, 3, 12);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.scale(), ValueScale::Uniform);
  const auto c = simulate_copula(spec, sites, 6, 5, 12);
  // the first three years do not depend on how many follow
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t d = 0; d < 6; ++d)
      for (std::size_t s = 0; s < 4; ++s) EXPECT_EQ(a.value(y, d, s), c.value(y, d, s));
}
