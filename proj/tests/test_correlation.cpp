#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "scalemix/correlation.hpp"
#include "scalemix/errors.hpp"
#include "scalemix/rng.hpp"

using namespace scalemix;

TEST(TemporalCorr, Examples) {
  EXPECT_DOUBLE_EQ(temporal_corr({TemporalFamily::Exponential, 0.874}, 0.0), 1.0);
  EXPECT_NEAR(temporal_corr({TemporalFamily::Exponential, 0.874}, 0.874), 0.36787944117144233, 1e-14);
  EXPECT_NEAR(temporal_corr({TemporalFamily::SquaredExponential, 2.0}, 2.0), 0.36787944117144233, 1e-14);
}

TEST(TemporalCorr, RejectsNonFinite) {
  EXPECT_THROW(temporal_corr({TemporalFamily::Exponential, 1.0}, std::nan("")), DomainError);
  EXPECT_THROW(temporal_corr({TemporalFamily::Exponential, std::numeric_limits<double>::infinity()}, 1.0), DomainError);
  EXPECT_THROW(temporal_corr({TemporalFamily::Exponential, 0.0}, 1.0), DomainError);
}

TEST(SpatialCorr, Examples) {
  EXPECT_DOUBLE_EQ(spatial_corr({SpatialFamily::Cauchy, 9.107}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(spatial_corr({SpatialFamily::Cauchy, 9.107}, 9.107), 0.5);
  EXPECT_NEAR(spatial_corr({SpatialFamily::Cauchy, 9.107}, 34.0), 0.06694240219063714, 1e-12);
  EXPECT_THROW(spatial_corr({SpatialFamily::Cauchy, 1.0}, -1.0), DomainError);
}

TEST(SpatialCorr, DecaysToZero) {
  EXPECT_LT(spatial_corr({SpatialFamily::Cauchy, 5.0}, 1e6), 1e-10);
  EXPECT_GT(spatial_corr({SpatialFamily::Cauchy, 5.0}, 1e6), 0.0);
}

TEST(KernelProperty, NonIncreasingOnRandomGrids) {
  RandomStream rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double scale = 0.1 + 20.0 * rng.uniform();
    const double a = 50.0 * rng.uniform(), b = 50.0 * rng.uniform();
    const double lo = std::min(a, b), hi = std::max(a, b);
    for (auto fam : {TemporalFamily::Exponential, TemporalFamily::SquaredExponential}) {
      const double v_lo = temporal_corr({fam, scale}, lo), v_hi = temporal_corr({fam, scale}, hi);
      EXPECT_GE(v_lo, v_hi);
      // strictly positive wherever the exponent stays within double range
      const double arg = fam == TemporalFamily::Exponential ? lo / scale : (lo / scale) * (lo / scale);
      if (arg < 700.0) EXPECT_GT(v_lo, 0.0);
      EXPECT_GE(v_lo, 0.0);
      EXPECT_LE(v_lo, 1.0);
    }
    if (lo < hi) EXPECT_GT(spatial_corr({SpatialFamily::Cauchy, scale}, lo), spatial_corr({SpatialFamily::Cauchy, scale}, hi));
  }
}

TEST(SpaceTimeCorr, ProductForm) {
  const SeparableSTKernel k{{SpatialFamily::Cauchy, 9.0}, {TemporalFamily::Exponential, 0.5}};
  EXPECT_DOUBLE_EQ(space_time_corr(k, 0.0, 0.0), 1.0);
  EXPECT_NEAR(space_time_corr(k, 12.0, 2.0), spatial_corr(k.spatial, 12.0) * temporal_corr(k.temporal, 2.0), 1e-15);
  EXPECT_LT(space_time_corr(k, 0.0, 1.0), 1.0);
  EXPECT_LT(space_time_corr(k, 1.0, 0.0), 1.0);
}

TEST(BuildCovariance, Examples) {
  const SeparableSTKernel k{{SpatialFamily::Cauchy, 9.107}, {TemporalFamily::Exponential, 1.0}};
  std::vector<Point2> one{{0.0, 0.0}};
  std::vector<int> t1{0};
  auto c = build_covariance(k, one, t1);
  ASSERT_EQ(c.full.rows(), 1);
  EXPECT_DOUBLE_EQ(c.full(0, 0), 1.0);

  std::vector<Point2> two{{0.0, 0.0}, {9.107, 0.0}};
  c = build_covariance(k, two, t1);
  EXPECT_DOUBLE_EQ(c.full(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(c.full(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(c.full(1, 1), 1.0);
}

TEST(BuildCovariance, Errors) {
  const SeparableSTKernel k{{SpatialFamily::Cauchy, 5.0}, {TemporalFamily::Exponential, 1.0}};
  std::vector<Point2> dup{{1.0, 1.0}, {1.0, 1.0}};
  std::vector<int> t{0, 1};
  EXPECT_THROW(build_covariance(k, dup, t), LayoutError);
  std::vector<Point2> ok{{0.0, 0.0}};
  std::vector<int> bad_t{1, 1};
  EXPECT_THROW(build_covariance(k, ok, bad_t), LayoutError);
}

TEST(BuildCovariance, SymmetricPsdAndSeparable) {
  RandomStream rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 6);
    const int T = 1 + static_cast<int>(rng.uniform() * 6);
    std::vector<Point2> sites;
    for (std::size_t i = 0; i < n; ++i) sites.push_back({60.0 * rng.uniform(), 40.0 * rng.uniform()});
    std::vector<int> times;
    for (int t = 0; t < T; ++t) times.push_back(t);
    const SeparableSTKernel k{{SpatialFamily::Cauchy, 1.0 + 15.0 * rng.uniform()},
                              {trial % 2 ? TemporalFamily::Exponential : TemporalFamily::SquaredExponential,
                               0.2 + 3.0 * rng.uniform()}};
    const auto c = build_covariance(k, sites, times);
    EXPECT_LT((c.full - c.full.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.full, Eigen::EigenvaluesOnly);
    EXPECT_GE(es.eigenvalues()(0), -1e-8 * es.eigenvalues()(es.eigenvalues().size() - 1));
    const Eigen::MatrixXd kron = kronecker(c.spatial, c.temporal);
    for (Eigen::Index i = 0; i < kron.rows(); ++i)
      for (Eigen::Index j = 0; j < kron.cols(); ++j)
        EXPECT_NEAR(c.full(i, j), kron(i, j), 1e-12 * std::max(1.0, std::abs(kron(i, j))));
    // (site i, time j) at row i*T + j
    const std::size_t r = SpaceTimeCovariance::index(1, static_cast<std::size_t>(T - 1), static_cast<std::size_t>(T));
    EXPECT_NEAR(c.full(0, static_cast<Eigen::Index>(r)),
                space_time_corr(k, distance(sites[0], sites[1]), T - 1), 1e-14);
  }
}

TEST(FamilyNames, RoundTrip) {
  for (auto f : {TemporalFamily::Exponential, TemporalFamily::SquaredExponential})
    EXPECT_EQ(temporal_family_from_string(to_string(f)), f);
  EXPECT_EQ(spatial_family_from_string(to_string(SpatialFamily::Cauchy)), SpatialFamily::Cauchy);
}
