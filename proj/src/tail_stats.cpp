#include "scalemix/tail_stats.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "scalemix/errors.hpp"
#include "scalemix/rng.hpp"
#include "scalemix/stats.hpp"

namespace scalemix {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMinSiteObservations = 20;

double site_threshold(const PanelDataset& data, std::size_t site, double u) {
  const auto series = data.site_series(site);
  const auto mask = data.site_mask(site);
  std::vector<double> v;
  v.reserve(series.size());
  for (std::size_t k = 0; k < series.size(); ++k)
    if (mask[k]) v.push_back(series[k]);
  if (v.size() < kMinSiteObservations)
    throw DomainError("chi: site " + data.sites()[site].id + " has fewer than 20 observations");
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, u);
}

double chi_value(std::size_t joint, std::size_t n, double u) {
  return static_cast<double>(joint) / (static_cast<double>(n) * (1.0 - u));
}

// Per-site, per-year bit rows of width T.
struct BitRows {
  std::size_t words = 0;
  std::size_t n_years = 0;
  std::vector<std::uint64_t> bits;  // (site * n_years + year) * words + w

  BitRows(std::size_t n_sites, std::size_t n_years_, std::size_t n_days)
      : words((n_days + 63) / 64), n_years(n_years_), bits(n_sites * n_years_ * words, 0) {}
  std::uint64_t* row(std::size_t site, std::size_t year) { return bits.data() + (site * n_years + year) * words; }
  const std::uint64_t* row(std::size_t site, std::size_t year) const {
    return bits.data() + (site * n_years + year) * words;
  }
};

// popcount(a & (b >> lag)) over one row: bit t of a with bit t + lag of b.
std::size_t and_shifted(const std::uint64_t* a, const std::uint64_t* b, std::size_t words, std::size_t lag) {
  const std::size_t q = lag / 64, r = lag % 64;
  std::size_t count = 0;
  for (std::size_t w = 0; w + q < words; ++w) {
    std::uint64_t s = b[w + q] >> r;
    if (r != 0 && w + q + 1 < words) s |= b[w + q + 1] << (64 - r);
    count += static_cast<std::size_t>(std::popcount(a[w] & s));
  }
  return count;
}

void set_bit(std::uint64_t* row, std::size_t t) { row[t / 64] |= std::uint64_t{1} << (t % 64); }

BitRows observed_rows(const PanelDataset& data) {
  BitRows rows(data.n_sites(), data.n_years(), data.n_days());
  for (std::size_t s = 0; s < data.n_sites(); ++s)
    for (std::size_t y = 0; y < data.n_years(); ++y)
      for (std::size_t d = 0; d < data.n_days(); ++d)
        if (data.observed(y, d, s)) set_bit(rows.row(s, y), d);
  return rows;
}

BitRows exceedance_rows(const PanelDataset& data, std::span<const double> thresholds) {
  BitRows rows(data.n_sites(), data.n_years(), data.n_days());
  for (std::size_t s = 0; s < data.n_sites(); ++s)
    for (std::size_t y = 0; y < data.n_years(); ++y)
      for (std::size_t d = 0; d < data.n_days(); ++d)
        if (data.observed(y, d, s) && data.value(y, d, s) > thresholds[s]) set_bit(rows.row(s, y), d);
  return rows;
}

std::size_t pair_count(const BitRows& a_rows, std::size_t a, const BitRows& b_rows, std::size_t b, std::size_t lag) {
  std::size_t count = 0;
  for (std::size_t y = 0; y < a_rows.n_years; ++y)
    count += and_shifted(a_rows.row(a, y), b_rows.row(b, y), a_rows.words, lag);
  return count;
}

void check_pair_args(const PanelDataset& data, std::size_t a, std::size_t b, int lag, double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("chi: u must lie in (0, 1)");
  if (a >= data.n_sites() || b >= data.n_sites()) throw DomainError("chi: site index out of range");
  if (lag < 0) throw DomainError("chi: lag must be nonnegative");
}

struct Accum {
  std::size_t clipped = 0;
  double operator()(std::size_t joint, std::size_t n, double u) {
    if (n == 0) return kNaN;
    const double c = chi_value(joint, n, u);
    if (c > 1.0) {
      ++clipped;
      return 1.0;
    }
    return c;
  }
};

// Mean of the two orientations, or the one that is defined.
double orient_mean(double x, double y) {
  if (std::isnan(x)) return y;
  if (std::isnan(y)) return x;
  return 0.5 * (x + y);
}

struct PairBin {
  std::size_t a, b, bin;
};

std::vector<PairBin> binned_pairs(const PanelDataset& data, std::span<const double> edges) {
  std::vector<PairBin> pairs;
  const auto& sites = data.sites();
  for (std::size_t a = 0; a < sites.size(); ++a)
    for (std::size_t b = a + 1; b < sites.size(); ++b)
      if (const auto bin = distance_bin(edges, distance(sites[a].coord, sites[b].coord))) pairs.push_back({a, b, *bin});
  return pairs;
}

ChiGrid empty_grid(const PanelDataset& data, const GridConfig& config) {
  config.validate();
  ChiGrid grid;
  grid.u_levels = config.u_levels;
  grid.lags = config.lags;
  grid.dist_edges = config.dist_edges.empty() ? default_distance_edges(data.coordinates(), config.n_distance_bins)
                                              : config.dist_edges;
  const std::size_t cells = grid.n_levels() * grid.m1() * grid.m2();
  grid.values.assign(cells, 0.0);
  grid.n_pairs.assign(cells, 0);
  return grid;
}

// Accumulates per-pair values (pair, level, lag) in pair order, then averages.
void reduce_grid(ChiGrid& grid, const std::vector<PairBin>& pairs, const std::vector<double>& pair_values) {
  const std::size_t nl = grid.n_levels(), m2 = grid.m2();
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (std::size_t l = 0; l < nl; ++l)
      for (std::size_t k = 0; k < m2; ++k) {
        const double v = pair_values[(p * nl + l) * m2 + k];
        if (std::isnan(v)) continue;
        const std::size_t c = grid.cell(l, pairs[p].bin, k);
        grid.values[c] += v;
        ++grid.n_pairs[c];
      }
  for (std::size_t c = 0; c < grid.values.size(); ++c)
    grid.values[c] = grid.n_pairs[c] == 0 ? kNaN : grid.values[c] / static_cast<double>(grid.n_pairs[c]);
}

}  // namespace

PairChi empirical_chi_pair(const PanelDataset& data, std::size_t site_a, std::size_t site_b, int lag, double u) {
  check_pair_args(data, site_a, site_b, lag, u);
  const double qa = site_threshold(data, site_a, u);
  const double qb = site_threshold(data, site_b, u);
  const auto k = static_cast<std::size_t>(lag);
  PairChi out;
  out.site_a = site_a;
  out.site_b = site_b;
  out.lag = lag;
  out.u = u;
  std::size_t joint = 0, n = 0;
  for (std::size_t y = 0; y < data.n_years(); ++y)
    for (std::size_t t = 0; t + k < data.n_days(); ++t) {
      if (!data.observed(y, t, site_a) || !data.observed(y, t + k, site_b)) continue;
      ++n;
      joint += data.value(y, t, site_a) > qa && data.value(y, t + k, site_b) > qb;
    }
  out.n_effective = n;
  if (n == 0) {
    out.chi_hat = out.chi_unclipped = kNaN;
    return out;
  }
  out.chi_unclipped = chi_value(joint, n, u);
  out.clipped = out.chi_unclipped > 1.0;
  out.chi_hat = std::min(out.chi_unclipped, 1.0);
  return out;
}

void GridConfig::validate() const {
  if (u_levels.empty()) throw ConfigError("grid: at least one level required");
  for (double u : u_levels)
    if (!(u > 0.0 && u < 1.0)) throw ConfigError("grid: levels must lie in (0, 1)");
  if (lags.empty()) throw ConfigError("grid: at least one lag required");
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] < 0) throw ConfigError("grid: lags must be nonnegative");
    if (i > 0 && lags[i] <= lags[i - 1]) throw ConfigError("grid: lags must be strictly increasing");
  }
  if (dist_edges.empty()) {
    if (n_distance_bins == 0) throw ConfigError("grid: at least one distance bin required");
  } else {
    if (dist_edges.size() < 2) throw ConfigError("grid: distance edges need at least two values");
    for (std::size_t i = 1; i < dist_edges.size(); ++i)
      if (!(dist_edges[i] > dist_edges[i - 1])) throw ConfigError("grid: distance edges must be strictly increasing");
  }
}

std::vector<double> default_distance_edges(std::span<const Point2> sites, std::size_t n_bins) {
  if (n_bins == 0) throw ConfigError("grid: at least one distance bin required");
  double max_d = 0.0;
  for (std::size_t a = 0; a < sites.size(); ++a)
    for (std::size_t b = a + 1; b < sites.size(); ++b) max_d = std::max(max_d, distance(sites[a], sites[b]));
  if (!(max_d > 0.0)) throw LayoutError("grid: need at least two distinct sites");
  const double top = 0.5 * max_d;
  std::vector<double> edges(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) edges[i] = top * static_cast<double>(i) / static_cast<double>(n_bins);
  return edges;
}

std::optional<std::size_t> distance_bin(std::span<const double> edges, double d) noexcept {
  if (edges.size() < 2 || !(d >= edges.front()) || !(d < edges.back())) return std::nullopt;
  const auto it = std::upper_bound(edges.begin(), edges.end(), d);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

std::size_t ChiGrid::empty_cells() const noexcept {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }));
}

bool ChiGrid::operator==(const ChiGrid& o) const {
  if (u_levels != o.u_levels || dist_edges != o.dist_edges || lags != o.lags || n_pairs != o.n_pairs ||
      clipped != o.clipped || values.size() != o.values.size())
    return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool na = std::isnan(values[i]), nb = std::isnan(o.values[i]);
    if (na != nb || (!na && values[i] != o.values[i])) return false;
  }
  return true;
}

ChiGrid chi_grid(const PanelDataset& data, const GridConfig& config) {
  ChiGrid grid = empty_grid(data, config);
  const auto pairs = binned_pairs(data, grid.dist_edges);
  const std::size_t nl = grid.n_levels(), m2 = grid.m2(), n_sites = data.n_sites();

  const BitRows valid = observed_rows(data);
  std::vector<BitRows> exceed;
  exceed.reserve(nl);
  for (double u : grid.u_levels) {
    std::vector<double> q(n_sites);
    for (std::size_t s = 0; s < n_sites; ++s) q[s] = site_threshold(data, s, u);
    exceed.push_back(exceedance_rows(data, q));
  }

  std::vector<double> pair_values(pairs.size() * nl * m2);
  std::size_t clipped = 0;
  const auto n_pairs = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 4) reduction(+ : clipped)
  for (std::ptrdiff_t pi = 0; pi < n_pairs; ++pi) {
    const auto p = static_cast<std::size_t>(pi);
    const auto [a, b, bin] = pairs[p];
    Accum acc;
    for (std::size_t k = 0; k < m2; ++k) {
      const auto lag = static_cast<std::size_t>(grid.lags[k]);
      const std::size_t n_ab = pair_count(valid, a, valid, b, lag);
      const std::size_t n_ba = lag == 0 ? n_ab : pair_count(valid, b, valid, a, lag);
      for (std::size_t l = 0; l < nl; ++l) {
        const double u = grid.u_levels[l];
        const double ab = acc(pair_count(exceed[l], a, exceed[l], b, lag), n_ab, u);
        pair_values[(p * nl + l) * m2 + k] =
            lag == 0 ? ab : orient_mean(ab, acc(pair_count(exceed[l], b, exceed[l], a, lag), n_ba, u));
      }
    }
    clipped += acc.clipped;
  }
  grid.clipped = clipped;
  reduce_grid(grid, pairs, pair_values);
  return grid;
}

ChiGrid chi_grid_serial(const PanelDataset& data, const GridConfig& config) {
  ChiGrid grid = empty_grid(data, config);
  const auto pairs = binned_pairs(data, grid.dist_edges);
  const std::size_t nl = grid.n_levels(), m2 = grid.m2();
  std::vector<double> pair_values(pairs.size() * nl * m2);
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (std::size_t l = 0; l < nl; ++l)
      for (std::size_t k = 0; k < m2; ++k) {
        const int lag = grid.lags[k];
        const double u = grid.u_levels[l];
        const PairChi ab = empirical_chi_pair(data, pairs[p].a, pairs[p].b, lag, u);
        grid.clipped += ab.clipped;
        double v = ab.chi_hat;
        if (lag != 0) {
          const PairChi ba = empirical_chi_pair(data, pairs[p].b, pairs[p].a, lag, u);
          grid.clipped += ba.clipped;
          v = orient_mean(v, ba.chi_hat);
        }
        pair_values[(p * nl + l) * m2 + k] = v;
      }
  reduce_grid(grid, pairs, pair_values);
  return grid;
}

void write_chi_grid_csv(std::ostream& out, const ChiGrid& grid) {
  out << "level,u,dist_lo,dist_hi,lag,chi,n_pairs\n";
  out.precision(17);
  for (std::size_t l = 0; l < grid.n_levels(); ++l)
    for (std::size_t b = 0; b < grid.m1(); ++b)
      for (std::size_t k = 0; k < grid.m2(); ++k) {
        const double v = grid.at(l, b, k);
        out << l << ',' << grid.u_levels[l] << ',' << grid.dist_edges[b] << ',' << grid.dist_edges[b + 1] << ','
            << grid.lags[k] << ',';
        if (std::isnan(v))
          out << "nan";
        else
          out << v;
        out << ',' << grid.n_pairs[grid.cell(l, b, k)] << '\n';
      }
}

nlohmann::json chi_grid_to_json(const ChiGrid& grid) {
  nlohmann::json values = nlohmann::json::array();
  for (double v : grid.values) values.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
  return {{"u_levels", grid.u_levels}, {"dist_edges", grid.dist_edges}, {"lags", grid.lags},
          {"values", values},          {"n_pairs", grid.n_pairs},       {"clipped", grid.clipped}};
}

ChiGrid chi_grid_from_json(const nlohmann::json& j) {
  ChiGrid g;
  try {
    g.u_levels = j.at("u_levels").get<std::vector<double>>();
    g.dist_edges = j.at("dist_edges").get<std::vector<double>>();
    g.lags = j.at("lags").get<std::vector<int>>();
    g.n_pairs = j.at("n_pairs").get<std::vector<std::size_t>>();
    g.clipped = j.at("clipped").get<std::size_t>();
    for (const auto& v : j.at("values")) g.values.push_back(v.is_null() ? kNaN : v.get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("chi grid JSON: ") + e.what());
  }
  if (g.values.size() != g.n_levels() * g.m1() * g.m2() || g.n_pairs.size() != g.values.size())
    throw IngestError("chi grid JSON: value count does not match the grid shape");
  return g;
}

std::vector<std::size_t> nearest_neighbours(std::span<const Point2> sites, std::size_t site, std::size_t k) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < sites.size(); ++i)
    if (i != site) idx.push_back(i);
  if (idx.size() < k) throw ConfigError("nearest_neighbours: not enough other sites");
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return distance(sites[site], sites[a]) < distance(sites[site], sites[b]);
  });
  idx.resize(k);
  return idx;
}

double chi_star(const PanelDataset& data, std::size_t site, int lag, double u) {
  if (data.n_sites() < 5) throw ConfigError("chi_star: at least five sites required");
  if (site >= data.n_sites()) throw DomainError("chi_star: site index out of range");
  if (lag < 0) throw DomainError("chi_star: lag must be nonnegative");
  if (!(u > 0.0 && u < 1.0)) throw DomainError("chi_star: u must lie in (0, 1)");
  const auto coords = data.coordinates();
  const auto nb = nearest_neighbours(coords, site, 4);
  const double q0 = site_threshold(data, site, u);
  std::array<double, 4> q{};
  for (std::size_t i = 0; i < 4; ++i) q[i] = site_threshold(data, nb[i], u);
  const auto k = static_cast<std::size_t>(lag);
  std::size_t cond = 0, joint = 0;
  for (std::size_t y = 0; y < data.n_years(); ++y)
    for (std::size_t t = k; t < data.n_days(); ++t) {
      if (!data.observed(y, t - k, site) || !(data.value(y, t - k, site) > q0)) continue;
      bool all_obs = true, all_exceed = true;
      for (std::size_t i = 0; i < 4; ++i) {
        if (!data.observed(y, t, nb[i])) {
          all_obs = false;
          break;
        }
        all_exceed = all_exceed && data.value(y, t, nb[i]) > q[i];
      }
      if (!all_obs) continue;
      ++cond;
      joint += all_exceed;
    }
  return cond == 0 ? kNaN : static_cast<double>(joint) / static_cast<double>(cond);
}

RmseSummary rmse_chi_star(std::span<const double> empirical, const std::vector<std::vector<double>>& draws) {
  if (draws.empty()) throw DomainError("rmse_chi_star: at least one draw required");
  RmseSummary out;
  out.per_site.assign(empirical.size(), kNaN);
  double total = 0.0;
  std::size_t defined = 0;
  for (std::size_t i = 0; i < empirical.size(); ++i) {
    double ss = 0.0;
    std::size_t n = 0;
    for (const auto& d : draws) {
      if (d.size() != empirical.size()) throw ShapeError("rmse_chi_star: draw length differs from site count");
      if (std::isnan(d[i]) || std::isnan(empirical[i])) continue;
      ss += (d[i] - empirical[i]) * (d[i] - empirical[i]);
      ++n;
    }
    if (n == 0) continue;
    out.per_site[i] = std::sqrt(ss / static_cast<double>(n));
    total += out.per_site[i];
    ++defined;
  }
  out.mean = defined == 0 ? kNaN : total / static_cast<double>(defined);
  return out;
}

std::string to_string(DependenceMode m) {
  switch (m) {
    case DependenceMode::Space:
      return "space";
    case DependenceMode::Time:
      return "time";
    case DependenceMode::SpaceTime:
      return "spacetime";
  }
  return "?";
}

DependenceMode dependence_mode_from_string(const std::string& s) {
  if (s == "space") return DependenceMode::Space;
  if (s == "time") return DependenceMode::Time;
  if (s == "spacetime" || s == "space-time") return DependenceMode::SpaceTime;
  throw ConfigError("unknown dependence mode '" + s + "' (expected space, time or spacetime)");
}

bool ClassReport::all_agree() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const ClassCheck& c) { return c.agrees(); });
}

ClassReport verify_dependence_class(const CopulaSpec& spec, std::span<const DependenceMode> modes,
                                    const ClassCheckConfig& config) {
  spec.validate();
  if (config.u_levels.size() < 2) throw ConfigError("verify_dependence_class: at least two levels required");
  if (config.lag < 1) throw ConfigError("verify_dependence_class: lag must be at least 1");
  if (!(config.distance_km > 0.0)) throw ConfigError("verify_dependence_class: distance must be positive");
  for (std::size_t i = 0; i < config.u_levels.size(); ++i)
    if (!(config.u_levels[i] > 0.0 && config.u_levels[i] < 1.0) || (i > 0 && config.u_levels[i] <= config.u_levels[i - 1]))
      throw ConfigError("verify_dependence_class: levels must increase within (0, 1)");
  const double u_max = config.u_levels.back();
  if (static_cast<double>(config.n_replicates) * (1.0 - u_max) < 500.0)
    throw ConfigError("verify_dependence_class: budget too small for u=" + std::to_string(u_max) +
                      " (need n(1-u) >= 500)");

  const auto t_days = static_cast<std::size_t>(config.lag) + 1;
  const CopulaSimulator sim(spec, {{0.0, 0.0}, {config.distance_km, 0.0}}, t_days);
  const std::size_t last = t_days - 1;
  // Cell indices (site * T + day) of the designated pair of each mode.
  auto cells = [&](DependenceMode m) -> std::pair<std::size_t, std::size_t> {
    switch (m) {
      case DependenceMode::Space:
        return {0, t_days};
      case DependenceMode::Time:
        return {0, last};
      case DependenceMode::SpaceTime:
        return {0, t_days + last};
    }
    return {0, 0};
  };

  const std::size_t nm = modes.size(), nu = config.u_levels.size();
  std::vector<std::size_t> joint(nm * nu, 0);
  const RandomStream base = RandomStream(config.seed).child(stream_tag::kReplicate);
  const auto n_rep = static_cast<std::ptrdiff_t>(config.n_replicates);
#pragma omp parallel
  {
    std::vector<std::size_t> local(nm * nu, 0);
    std::vector<double> buf(2 * t_days);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < n_rep; ++r) {
      sim.simulate_uniform(base.child(static_cast<std::uint64_t>(r)), buf);
      for (std::size_t m = 0; m < nm; ++m) {
        const auto [i, j] = cells(modes[m]);
        const double lo = std::min(buf[i], buf[j]);
        for (std::size_t l = 0; l < nu; ++l) local[m * nu + l] += lo > config.u_levels[l];
      }
    }
#pragma omp critical
    for (std::size_t c = 0; c < joint.size(); ++c) joint[c] += local[c];
  }

  ClassReport report;
  report.spec = spec;
  const DependenceClass expected = classify_dependence(spec);
  const auto n = static_cast<double>(config.n_replicates);
  for (std::size_t m = 0; m < nm; ++m) {
    ClassCheck c;
    c.mode = modes[m];
    c.u_levels = config.u_levels;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    bool all_positive = true;
    for (std::size_t l = 0; l < nu; ++l) {
      const double tail = 1.0 - config.u_levels[l];
      const std::size_t cnt = joint[m * nu + l];
      const double p = static_cast<double>(cnt) / n;
      c.joint_counts.push_back(cnt);
      c.chi.push_back(p / tail);
      c.se.push_back(std::sqrt(p * (1.0 - p) / n) / tail);
      if (cnt == 0) {
        all_positive = false;
        continue;
      }
      const double x = std::log(tail), y = std::log(p / tail);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const auto k = static_cast<double>(nu);
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    c.eta_hat = all_positive ? 1.0 / (1.0 + slope) : kNaN;
    const double ratio = c.chi.front() > 0.0 ? c.chi.back() / c.chi.front() : 0.0;
    c.verdict = (ratio >= config.decay_ratio && c.chi.back() > 2.0 * c.se.back()) ? DepKind::AD : DepKind::AI;
    c.expected = modes[m] == DependenceMode::Space  ? expected.in_space
                 : modes[m] == DependenceMode::Time ? expected.in_time
                                                    : expected.in_space_time;
    report.checks.push_back(std::move(c));
  }
  return report;
}

nlohmann::json class_report_to_json(const ClassReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"mode", to_string(c.mode)},
                      {"u", c.u_levels},
                      {"chi", c.chi},
                      {"se", c.se},
                      {"joint_counts", c.joint_counts},
                      {"eta_hat", std::isnan(c.eta_hat) ? nlohmann::json(nullptr) : nlohmann::json(c.eta_hat)},
                      {"verdict", to_string(c.verdict)},
                      {"expected", to_string(c.expected)},
                      {"agrees", c.agrees()}});
  }
  return {{"variant", to_string(report.spec.variant)},
          {"delta", report.spec.delta},
          {"phi", report.spec.phi},
          {"psi1", report.spec.psi1},
          {"psi2", report.spec.psi2},
          {"nu", report.spec.nu},
          {"checks", checks},
          {"all_agree", report.all_agree()}};
}

}  // namespace scalemix
