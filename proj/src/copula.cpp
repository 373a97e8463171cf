#include "scalemix/copula.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "scalemix/errors.hpp"

namespace scalemix {

Variant variant_from_int(int v) {
  if (v < 1 || v > 8) throw ConfigError("model variant must be 1..8, got " + std::to_string(v));
  return static_cast<Variant>(v);
}

Variant variant_from_string(const std::string& s) {
  std::string digits = s;
  if (!digits.empty() && (digits[0] == 'M' || digits[0] == 'm')) digits = digits.substr(1);
  if (digits.size() != 1 || digits[0] < '1' || digits[0] > '8') throw ConfigError("unknown model variant '" + s + "'");
  return variant_from_int(digits[0] - '0');
}

std::string to_string(Variant v) { return "M" + std::to_string(static_cast<int>(v)); }

std::string to_string(DepKind k) { return k == DepKind::AD ? "AD" : "AI"; }

void CopulaSpec::validate() const {
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("delta must lie in [0, 1]");
  if (!(phi > 0.0) || !(psi1 > 0.0) || !(psi2 > 0.0)) throw DomainError("phi, psi1 and psi2 must be positive");
  if (!(nu > 0.0)) throw DomainError("nu must be positive");
}

namespace {
// Row index within a model quadruple: 0 -> (AI, AD), 1 -> (AD, AI), 2 -> (AI, AI), 3 -> (AD, AD).
int row_of(Variant v) { return (static_cast<int>(v) - 1) % 4; }
}  // namespace

ProcessClass r_process(const CopulaSpec& spec) {
  const int row = row_of(spec.variant);
  return (row == 1 || row == 3) ? ProcessClass::student_t(spec.nu) : ProcessClass::gaussian();
}

ProcessClass w_process(const CopulaSpec& spec) {
  const int row = row_of(spec.variant);
  return (row == 0 || row == 3) ? ProcessClass::student_t(spec.nu) : ProcessClass::gaussian();
}

DependenceClass classify_dependence(const CopulaSpec& spec) {
  using enum DepKind;
  using Cls = std::array<DepKind, 3>;
  struct Row {
    Cls above, at, below;
  };
  // Columns: delta > 0.5, delta = 0.5, delta < 0.5; entries (space, time, space-time).
  static const Row kTable[8] = {
      {{AD, AI, AI}, {AD, AI, AI}, {AD, AD, AD}},  // M1: R AI, W AD
      {{AD, AD, AD}, {AI, AI, AI}, {AI, AI, AI}},  // M2: R AD, W AI
      {{AD, AI, AI}, {AI, AI, AI}, {AI, AI, AI}},  // M3: R AI, W AI
      {{AD, AD, AD}, {AD, AD, AD}, {AD, AD, AD}},  // M4: R AD, W AD
      {{AI, AD, AI}, {AI, AD, AI}, {AD, AD, AD}},  // M5: R(s) AI, W AD
      {{AD, AD, AD}, {AI, AI, AI}, {AI, AI, AI}},  // M6: R(s) AD, W AI
      {{AI, AD, AI}, {AI, AI, AI}, {AI, AI, AI}},  // M7: R(s) AI, W AI
      {{AD, AD, AD}, {AD, AD, AD}, {AD, AD, AD}},  // M8: R(s) AD, W AD
  };
  const Row& row = kTable[static_cast<int>(spec.variant) - 1];
  const bool half = std::abs(spec.delta - 0.5) < kHalfDeltaSwitch;
  const Cls& c = half ? row.at : (spec.delta > 0.5 ? row.above : row.below);
  DependenceClass out;
  out.in_space = c[0];
  out.in_time = c[1];
  out.in_space_time = c[2];
  if (out.in_space == AD && out.in_time == AD && out.in_space_time == AD) out.eta_hint = 1.0;
  return out;
}

double marginal_survival_log(double a, double delta) {
  if (delta <= 0.0 || delta >= 1.0) return std::exp(-a);
  if (std::abs(delta - 0.5) < kHalfDeltaSwitch) return std::exp(-2.0 * a) * (2.0 * a + 1.0);
  const double d = 2.0 * delta - 1.0;
  return delta / d * std::exp(-a / delta) - (1.0 - delta) / d * std::exp(-a / (1.0 - delta));
}

double marginal_cdf(double x, double delta) {
  if (!(x >= 1.0)) throw DomainError("marginal_cdf: x must be >= 1");
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("marginal_cdf: delta must lie in [0, 1]");
  if (std::isinf(x)) return 1.0;
  const double g = 1.0 - marginal_survival_log(std::log(x), delta);
  return std::clamp(g, 0.0, 1.0);
}

namespace {
// d(1 - S)/d(log x).
double marginal_density_log(double a, double delta) {
  if (delta <= 0.0 || delta >= 1.0) return std::exp(-a);
  if (std::abs(delta - 0.5) < kHalfDeltaSwitch) return 4.0 * a * std::exp(-2.0 * a);
  return (std::exp(-a / delta) - std::exp(-a / (1.0 - delta))) / (2.0 * delta - 1.0);
}
}  // namespace

double marginal_quantile(double u, double delta) {
  if (!(u >= 0.0 && u < 1.0)) throw DomainError("marginal_quantile: u must lie in [0, 1)");
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("marginal_quantile: delta must lie in [0, 1]");
  if (u == 0.0) return 1.0;
  const double target = 1.0 - u;  // survival to match
  double lo = 0.0, hi = 1.0;
  while (marginal_survival_log(hi, delta) > target) {
    lo = hi;
    hi *= 2.0;
  }
  double a = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double g = 1.0 - marginal_survival_log(a, delta);
    const double diff = g - u;
    if (std::abs(diff) < 1e-12 || hi - lo < 1e-15 * std::max(1.0, hi)) return std::exp(a);
    if (diff > 0.0) hi = a;
    else lo = a;
    const double dens = marginal_density_log(a, delta);
    double next = dens > 0.0 ? a - diff / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    a = next;
  }
  if (std::abs(1.0 - marginal_survival_log(a, delta) - u) < 1e-10) return std::exp(a);
  throw NumericalError("marginal_quantile: no convergence in 200 iterations");
}

CopulaSimulator::CopulaSimulator(const CopulaSpec& spec, std::vector<Point2> sites, std::size_t n_days)
    : spec_(spec), sites_(std::move(sites)), n_days_(n_days) {
  spec_.validate();
  if (sites_.empty() || n_days_ == 0) throw LayoutError("copula simulation needs at least one site and one day");
  const FieldLayout layout = FieldLayout::regular(sites_, static_cast<int>(n_days_));
  if (indexes_r_by_space(spec_.variant))
    r_sampler_ = GaussianFieldSampler(SpatialKernel{spec_.spatial_family, spec_.phi}, layout);
  else
    r_sampler_ = GaussianFieldSampler(TemporalKernel{spec_.r_temporal_family, spec_.phi}, layout);
  w_sampler_ = GaussianFieldSampler(
      SeparableSTKernel{SpatialKernel{spec_.spatial_family, spec_.psi1}, TemporalKernel{spec_.w_temporal_family, spec_.psi2}},
      layout);
}

std::size_t CopulaSimulator::r_size() const noexcept { return indexes_r_by_space(spec_.variant) ? sites_.size() : n_days_; }

void CopulaSimulator::raw_r(const RandomStream& ys, std::span<double> out) const {
  RandomStream normals = ys.child(stream_tag::kRField);
  r_sampler_.sample(normals, out);
  const ProcessClass pc = r_process(spec_);
  if (pc.kind == ProcessKind::StudentT) {
    RandomStream mixing = ys.child(stream_tag::kRMixing);
    const double scale = 1.0 / std::sqrt(mixing.gamma(pc.nu / 2.0, pc.nu / 2.0));
    for (auto& v : out) v *= scale;
  }
}

void CopulaSimulator::raw_w(const RandomStream& ys, std::span<double> out) const {
  RandomStream normals = ys.child(stream_tag::kWField);
  w_sampler_.sample(normals, out);
  const ProcessClass pc = w_process(spec_);
  if (pc.kind == ProcessKind::StudentT) {
    RandomStream mixing = ys.child(stream_tag::kWMixing);
    const double scale = 1.0 / std::sqrt(mixing.gamma(pc.nu / 2.0, pc.nu / 2.0));
    for (auto& v : out) v *= scale;
  }
}

std::size_t CopulaSimulator::simulate_log_r(const RandomStream& ys, std::span<double> out) const {
  raw_r(ys, out);
  return to_log_pareto_inplace(out, r_process(spec_));
}

std::size_t CopulaSimulator::simulate_log_w(const RandomStream& ys, std::span<double> out) const {
  raw_w(ys, out);
  return to_log_pareto_inplace(out, w_process(spec_));
}

std::size_t CopulaSimulator::simulate_log_x(const RandomStream& ys, std::span<double> out) const {
  thread_local std::vector<double> r;
  r.resize(r_size());
  std::size_t clamped = simulate_log_r(ys, r);
  clamped += simulate_log_w(ys, out);
  const double d = spec_.delta;
  const std::size_t n = sites_.size(), t = n_days_;
  const bool by_space = indexes_r_by_space(spec_.variant);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < t; ++j) {
      double& x = out[i * t + j];
      x = d * r[by_space ? i : j] + (1.0 - d) * x;
    }
  return clamped;
}

std::size_t CopulaSimulator::simulate_x_direct(const RandomStream& ys, std::span<double> out) const {
  std::vector<double> r(r_size());
  raw_r(ys, r);
  raw_w(ys, out);
  const ProcessClass rp = r_process(spec_), wp = w_process(spec_);
  std::size_t clamped = 0;
  auto pareto = [&clamped](const ProcessClass& pc, double v) {
    double s = process_survival(pc, v);
    if (s < kMinSurvival) {
      s = kMinSurvival;
      ++clamped;
    }
    return 1.0 / s;
  };
  for (auto& v : r) v = pareto(rp, v);
  const double d = spec_.delta;
  const std::size_t n = sites_.size(), t = n_days_;
  const bool by_space = indexes_r_by_space(spec_.variant);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < t; ++j) {
      double& x = out[i * t + j];
      x = std::pow(r[by_space ? i : j], d) * std::pow(pareto(wp, x), 1.0 - d);
    }
  return clamped;
}

std::size_t CopulaSimulator::simulate_uniform(const RandomStream& ys, std::span<double> out) const {
  const std::size_t clamped = simulate_log_x(ys, out);
  for (auto& v : out) v = 1.0 - marginal_survival_log(v, spec_.delta);
  return clamped;
}

RandomStream year_stream(std::uint64_t seed, std::size_t year) {
  return RandomStream(seed).child(stream_tag::kYear).child(year);
}

PanelDataset simulate_copula(const CopulaSimulator& sim, const std::vector<Site>& sites, std::size_t n_years,
                             std::uint64_t seed) {
  if (n_years == 0) throw LayoutError("simulate_copula: need at least one year");
  if (sites.size() != sim.n_sites()) throw LayoutError("simulate_copula: site list does not match the simulator");
  PanelDataset panel(sites, n_years, sim.n_days(), ValueScale::Uniform);
  const std::size_t n = sim.n_sites(), t = sim.n_days();
#pragma omp parallel
  {
    std::vector<double> buf(n * t);
#pragma omp for schedule(static)
    for (std::size_t y = 0; y < n_years; ++y) {
      sim.simulate_uniform(year_stream(seed, y), buf);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < t; ++j) panel.set(y, j, i, buf[i * t + j]);
    }
  }
  return panel;
}

PanelDataset simulate_copula(const CopulaSpec& spec, const std::vector<Site>& sites, std::size_t n_days,
                             std::size_t n_years, std::uint64_t seed) {
  std::vector<Point2> coords;
  for (const auto& s : sites) coords.push_back(s.coord);
  const CopulaSimulator sim(spec, std::move(coords), n_days);
  return simulate_copula(sim, sites, n_years, seed);
}

}  // namespace scalemix
