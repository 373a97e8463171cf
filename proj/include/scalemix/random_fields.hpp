#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "scalemix/correlation.hpp"
#include "scalemix/rng.hpp"

namespace scalemix {

enum class ProcessKind { Gaussian, StudentT };

/// Gaussian, or Student-t with nu degrees of freedom (Gaussian is the nu -> inf limit).
struct ProcessClass {
  ProcessKind kind = ProcessKind::Gaussian;
  double nu = 1.0;

  static ProcessClass gaussian() { return {ProcessKind::Gaussian, 0.0}; }
  static ProcessClass student_t(double nu) { return {ProcessKind::StudentT, nu}; }
};

std::string to_string(const ProcessClass& c);

/// Marginal CDF and survival function of the process class.
double process_cdf(const ProcessClass& c, double v);
double process_survival(const ProcessClass& c, double v);

struct FieldLayout {
  std::vector<Point2> sites;
  std::vector<int> times;

  static FieldLayout regular(std::vector<Point2> sites, int n_times);
};

/// A field over times only (one row), over sites only (one column), or over sites x times.
using FieldKernel = std::variant<SeparableSTKernel, TemporalKernel, SpatialKernel>;

struct FieldSpec {
  ProcessClass process;
  FieldKernel kernel;
  FieldLayout layout;
};

/// Field values, row-major sites x times. A temporal-only field has one row, a
/// spatial-only field one column.
struct FieldSample {
  std::vector<double> values;
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::uint64_t rng_seed = 0;
  std::size_t clamped = 0;

  [[nodiscard]] double at(std::size_t row, std::size_t col) const { return values[row * n_cols + col]; }
};

/// Lower Cholesky factor with escalating diagonal jitter (0, then 1e-10 up to 1e-6).
/// Throws NumericalError naming `factor_name` if every attempt fails.
Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& m, const std::string& factor_name,
                                     double* jitter_used = nullptr);

/// Prepared sampler for a zero-mean unit-variance Gaussian field with separable
/// correlation. Holds the Cholesky factors L_S (rows) and L_T (columns) and maps a
/// standard-normal matrix Z to L_S Z L_T^T, which equals (L_S (x) L_T) vec(Z).
class GaussianFieldSampler {
 public:
  GaussianFieldSampler() = default;
  GaussianFieldSampler(const FieldKernel& kernel, const FieldLayout& layout);

  [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(row_factor_.rows()); }
  [[nodiscard]] std::size_t cols() const noexcept { return static_cast<std::size_t>(col_factor_.rows()); }
  [[nodiscard]] std::size_t size() const noexcept { return rows() * cols(); }
  [[nodiscard]] const Eigen::MatrixXd& row_factor() const noexcept { return row_factor_; }
  [[nodiscard]] const Eigen::MatrixXd& col_factor() const noexcept { return col_factor_; }

  /// out = (L_S (x) L_T) z, both row-major rows x cols.
  void apply(std::span<const double> z, std::span<double> out) const;
  /// Draws z from `stream` and applies the factors.
  void sample(RandomStream& stream, std::span<double> out) const;

 private:
  Eigen::MatrixXd row_factor_;
  Eigen::MatrixXd col_factor_;
  bool col_identity_ = false;
  bool row_identity_ = false;
};

/// Same map computed through the dense Cholesky of the full covariance; reference path.
std::vector<double> apply_dense_cholesky(const FieldKernel& kernel, const FieldLayout& layout,
                                         std::span<const double> z);

FieldSample simulate_gaussian(const FieldSpec& spec, std::uint64_t seed);
FieldSample simulate_student_t(const FieldSpec& spec, std::uint64_t seed);
/// Dispatches on spec.process.
FieldSample simulate_field(const FieldSpec& spec, std::uint64_t seed);

/// Smallest survival probability kept by the Pareto transform (1 - F >= 2^-53).
inline constexpr double kMinSurvival = 0x1.0p-53;

/// v -> 1 / (1 - F(v)). Throws DomainError on NaN; clamps 1 - F at 2^-53 and counts it.
FieldSample to_standard_pareto(const FieldSample& sample, const ProcessClass& process);

/// v -> -log(1 - F(v)), the log of the Pareto transform (standard exponential margins).
/// Returns the number of clamped entries.
std::size_t to_log_pareto_inplace(std::span<double> values, const ProcessClass& process);

}  // namespace scalemix
