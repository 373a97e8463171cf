#include "scalemix/random_fields.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "scalemix/errors.hpp"

namespace scalemix {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double student_t_survival(double nu, double v) {
  if (nu == 1.0) return std::atan2(1.0, v) / std::numbers::pi;
  return boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<double>(nu), v));
}

double normal_survival(double v) { return 0.5 * std::erfc(v / std::numbers::sqrt2); }

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> correlation_factors(const FieldKernel& kernel,
                                                                const FieldLayout& layout) {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  if (const auto* st = std::get_if<SeparableSTKernel>(&kernel)) {
    auto cov = build_covariance(*st, layout.sites, layout.times, false);
    return {std::move(cov.spatial), std::move(cov.temporal)};
  }
  if (const auto* t = std::get_if<TemporalKernel>(&kernel)) {
    for (std::size_t j = 1; j < layout.times.size(); ++j)
      if (layout.times[j] <= layout.times[j - 1]) throw LayoutError("field layout: times must be strictly increasing");
    return {one, temporal_correlation_matrix(*t, layout.times)};
  }
  const auto& s = std::get<SpatialKernel>(kernel);
  SeparableSTKernel st{s, TemporalKernel{}};
  const std::vector<int> single_time{0};
  auto cov = build_covariance(st, layout.sites, single_time, false);
  return {std::move(cov.spatial), one};
}

bool is_identity(const Eigen::MatrixXd& m) { return m.isIdentity(0.0); }

}  // namespace

std::string to_string(const ProcessClass& c) {
  if (c.kind == ProcessKind::Gaussian) return "gaussian";
  std::ostringstream os;
  os << "student_t(" << c.nu << ")";
  return os.str();
}

double process_survival(const ProcessClass& c, double v) {
  return c.kind == ProcessKind::Gaussian ? normal_survival(v) : student_t_survival(c.nu, v);
}

double process_cdf(const ProcessClass& c, double v) { return process_survival(c, -v); }

FieldLayout FieldLayout::regular(std::vector<Point2> sites, int n_times) {
  FieldLayout layout;
  layout.sites = std::move(sites);
  layout.times.resize(static_cast<std::size_t>(n_times));
  for (int j = 0; j < n_times; ++j) layout.times[static_cast<std::size_t>(j)] = j;
  return layout;
}

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& m, const std::string& factor_name, double* jitter_used) {
  double jitter = 0.0;
  for (;;) {
    Eigen::LLT<Eigen::MatrixXd> llt(m + jitter * Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = jitter;
      return llt.matrixL();
    }
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    if (jitter > 1e-6 * (1.0 + 1e-9)) break;
  }
  throw NumericalError("Cholesky of the " + factor_name + " correlation factor failed after jitter 1e-6");
}

GaussianFieldSampler::GaussianFieldSampler(const FieldKernel& kernel, const FieldLayout& layout) {
  auto [rows, cols] = correlation_factors(kernel, layout);
  row_identity_ = is_identity(rows);
  col_identity_ = is_identity(cols);
  row_factor_ = row_identity_ ? rows : cholesky_with_jitter(rows, "spatial");
  col_factor_ = col_identity_ ? cols : cholesky_with_jitter(cols, "temporal");
}

void GaussianFieldSampler::apply(std::span<const double> z, std::span<double> out) const {
  const auto n = row_factor_.rows();
  const auto t = col_factor_.rows();
  Eigen::Map<const RowMajor> zm(z.data(), n, t);
  Eigen::Map<RowMajor> om(out.data(), n, t);
  if (row_identity_ && col_identity_) {
    om = zm;
  } else if (row_identity_) {
    om.noalias() = zm * col_factor_.triangularView<Eigen::Lower>().transpose();
  } else if (col_identity_) {
    om.noalias() = row_factor_.triangularView<Eigen::Lower>() * zm;
  } else {
    thread_local Eigen::MatrixXd scratch;
    scratch.resize(n, t);
    scratch.noalias() = row_factor_.triangularView<Eigen::Lower>() * zm;
    om.noalias() = scratch * col_factor_.triangularView<Eigen::Lower>().transpose();
  }
}

void GaussianFieldSampler::sample(RandomStream& stream, std::span<double> out) const {
  thread_local std::vector<double> z;
  z.resize(size());
  for (auto& v : z) v = stream.normal();
  apply(z, out);
}

std::vector<double> apply_dense_cholesky(const FieldKernel& kernel, const FieldLayout& layout,
                                         std::span<const double> z) {
  auto [rows, cols] = correlation_factors(kernel, layout);
  const Eigen::MatrixXd full = kronecker(rows, cols);
  const Eigen::MatrixXd chol = cholesky_with_jitter(full, "full space-time");
  Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  const Eigen::VectorXd out = chol.triangularView<Eigen::Lower>() * zv;
  return {out.data(), out.data() + out.size()};
}

FieldSample simulate_gaussian(const FieldSpec& spec, std::uint64_t seed) {
  const GaussianFieldSampler sampler(spec.kernel, spec.layout);
  FieldSample sample;
  sample.n_rows = sampler.rows();
  sample.n_cols = sampler.cols();
  sample.rng_seed = seed;
  sample.values.resize(sampler.size());
  RandomStream stream(seed);
  sampler.sample(stream, sample.values);
  return sample;
}

FieldSample simulate_student_t(const FieldSpec& spec, std::uint64_t seed) {
  if (spec.process.kind != ProcessKind::StudentT || !(spec.process.nu > 0.0))
    throw DomainError("simulate_student_t: requires a Student-t process with nu > 0");
  FieldSample sample = simulate_gaussian(spec, seed);
  // One Gamma(nu/2, rate nu/2) scale for the whole field.
  RandomStream mixing = RandomStream(seed).child(stream_tag::kWMixing);
  const double g = mixing.gamma(spec.process.nu / 2.0, spec.process.nu / 2.0);
  const double scale = 1.0 / std::sqrt(g);
  for (auto& v : sample.values) v *= scale;
  return sample;
}

FieldSample simulate_field(const FieldSpec& spec, std::uint64_t seed) {
  return spec.process.kind == ProcessKind::Gaussian ? simulate_gaussian(spec, seed) : simulate_student_t(spec, seed);
}

FieldSample to_standard_pareto(const FieldSample& sample, const ProcessClass& process) {
  FieldSample out = sample;
  out.clamped = 0;
  for (auto& v : out.values) {
    if (std::isnan(v)) throw DomainError("to_standard_pareto: NaN input");
    double s = process_survival(process, v);
    if (s < kMinSurvival) {
      s = kMinSurvival;
      ++out.clamped;
    }
    v = 1.0 / s;
  }
  return out;
}

std::size_t to_log_pareto_inplace(std::span<double> values, const ProcessClass& process) {
  std::size_t clamped = 0;
  for (auto& v : values) {
    if (std::isnan(v)) throw DomainError("to_log_pareto: NaN input");
    double s = process_survival(process, v);
    if (s < kMinSurvival) {
      s = kMinSurvival;
      ++clamped;
    }
    v = -std::log(s);
  }
  return clamped;
}

}  // namespace scalemix
