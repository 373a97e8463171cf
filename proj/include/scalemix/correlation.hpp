#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scalemix {

struct Point2 {
  double x = 0.0;  // km
  double y = 0.0;  // km
};

double distance(const Point2& a, const Point2& b) noexcept;

enum class TemporalFamily { Exponential, SquaredExponential };
enum class SpatialFamily { Cauchy };

std::string to_string(TemporalFamily f);
std::string to_string(SpatialFamily f);
TemporalFamily temporal_family_from_string(const std::string& s);
SpatialFamily spatial_family_from_string(const std::string& s);

/// exp(-k/scale) or exp(-(k/scale)^2), with k in days.
struct TemporalKernel {
  TemporalFamily family = TemporalFamily::Exponential;
  double scale = 1.0;
};

/// [1 + (h/scale)^2]^-1, with h in km.
struct SpatialKernel {
  SpatialFamily family = SpatialFamily::Cauchy;
  double scale = 1.0;
};

struct SeparableSTKernel {
  SpatialKernel spatial;
  TemporalKernel temporal;
};

double temporal_corr(const TemporalKernel& kernel, double lag);
double spatial_corr(const SpatialKernel& kernel, double dist);
double space_time_corr(const SeparableSTKernel& kernel, double dist, double lag);

/// Correlation matrices over a list of sites or times.
Eigen::MatrixXd spatial_correlation_matrix(const SpatialKernel& kernel, std::span<const Point2> sites);
Eigen::MatrixXd temporal_correlation_matrix(const TemporalKernel& kernel, std::span<const int> times);

/// Space-time covariance over sites x times.
///
/// Index (i, j) means site i, time j and maps to row i * T + j, so the full matrix
/// is the Kronecker product spatial (x) temporal.
struct SpaceTimeCovariance {
  Eigen::MatrixXd spatial;   // n x n
  Eigen::MatrixXd temporal;  // T x T
  Eigen::MatrixXd full;      // (n*T) x (n*T)

  [[nodiscard]] static std::size_t index(std::size_t site, std::size_t time, std::size_t n_times) {
    return site * n_times + time;
  }
};

/// Kronecker product, row index a_row * B.rows() + b_row.
Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Throws LayoutError for duplicated sites or non-increasing times.
SpaceTimeCovariance build_covariance(const SeparableSTKernel& kernel, std::span<const Point2> sites,
                                     std::span<const int> times, bool assemble_full = true);

}  // namespace scalemix
