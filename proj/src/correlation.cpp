#include "scalemix/correlation.hpp"

#include <cmath>

#include "scalemix/errors.hpp"

namespace scalemix {

double distance(const Point2& a, const Point2& b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

std::string to_string(TemporalFamily f) {
  return f == TemporalFamily::Exponential ? "exponential" : "squared_exponential";
}

std::string to_string(SpatialFamily) { return "cauchy"; }

TemporalFamily temporal_family_from_string(const std::string& s) {
  if (s == "exponential") return TemporalFamily::Exponential;
  if (s == "squared_exponential") return TemporalFamily::SquaredExponential;
  throw ConfigError("unknown temporal kernel family '" + s + "'");
}

SpatialFamily spatial_family_from_string(const std::string& s) {
  if (s == "cauchy") return SpatialFamily::Cauchy;
  throw ConfigError("unknown spatial kernel family '" + s + "'");
}

double temporal_corr(const TemporalKernel& kernel, double lag) {
  if (!std::isfinite(lag) || !std::isfinite(kernel.scale)) throw DomainError("temporal_corr: non-finite lag or scale");
  if (!(kernel.scale > 0.0)) throw DomainError("temporal_corr: scale must be positive");
  if (lag < 0.0) throw DomainError("temporal_corr: negative lag");
  const double r = lag / kernel.scale;
  switch (kernel.family) {
    case TemporalFamily::Exponential:
      return std::exp(-r);
    case TemporalFamily::SquaredExponential:
      return std::exp(-r * r);
  }
  return 0.0;
}

double spatial_corr(const SpatialKernel& kernel, double dist) {
  if (!std::isfinite(dist) || !std::isfinite(kernel.scale)) throw DomainError("spatial_corr: non-finite input");
  if (!(kernel.scale > 0.0)) throw DomainError("spatial_corr: scale must be positive");
  if (dist < 0.0) throw DomainError("spatial_corr: negative distance");
  const double r = dist / kernel.scale;
  return 1.0 / (1.0 + r * r);
}

double space_time_corr(const SeparableSTKernel& kernel, double dist, double lag) {
  return spatial_corr(kernel.spatial, dist) * temporal_corr(kernel.temporal, lag);
}

Eigen::MatrixXd spatial_correlation_matrix(const SpatialKernel& kernel, std::span<const Point2> sites) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = 1.0;
    for (Eigen::Index k = 0; k < i; ++k) {
      const double c = spatial_corr(kernel, distance(sites[i], sites[k]));
      m(i, k) = c;
      m(k, i) = c;
    }
  }
  return m;
}

Eigen::MatrixXd temporal_correlation_matrix(const TemporalKernel& kernel, std::span<const int> times) {
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = 1.0;
    for (Eigen::Index k = 0; k < i; ++k) {
      const double c = temporal_corr(kernel, std::abs(static_cast<double>(times[i] - times[k])));
      m(i, k) = c;
      m(k, i) = c;
    }
  }
  return m;
}

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k)
      out.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
  return out;
}

SpaceTimeCovariance build_covariance(const SeparableSTKernel& kernel, std::span<const Point2> sites,
                                     std::span<const int> times, bool assemble_full) {
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (!std::isfinite(sites[i].x) || !std::isfinite(sites[i].y))
      throw LayoutError("build_covariance: non-finite coordinate for site " + std::to_string(i));
    for (std::size_t k = 0; k < i; ++k)
      if (sites[i].x == sites[k].x && sites[i].y == sites[k].y)
        throw LayoutError("build_covariance: sites " + std::to_string(k) + " and " + std::to_string(i) +
                          " share coordinates (duplicate site,time pairs)");
  }
  for (std::size_t j = 1; j < times.size(); ++j)
    if (times[j] <= times[j - 1]) throw LayoutError("build_covariance: times must be strictly increasing");

  SpaceTimeCovariance cov;
  cov.spatial = spatial_correlation_matrix(kernel.spatial, sites);
  cov.temporal = temporal_correlation_matrix(kernel.temporal, times);
  if (assemble_full) cov.full = kronecker(cov.spatial, cov.temporal);
  return cov;
}

}  // namespace scalemix
