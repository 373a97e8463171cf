#include "scalemix/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "scalemix/errors.hpp"
#include "scalemix/serialize.hpp"

namespace scalemix {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "scalemix-estimator";
constexpr int kMaxAttempts = 10;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index, std::uint64_t attempt = 0) {
  return mix64(mix64(mix64(seed ^ mix64(tag)) + index) + attempt);
}

std::vector<Point2> coords_of(const std::vector<Site>& sites) {
  std::vector<Point2> out;
  out.reserve(sites.size());
  for (const auto& s : sites) out.push_back(s.coord);
  return out;
}

struct Replicate {
  std::vector<double> features;
  DependenceParams theta{};
  std::size_t attempts = 0;
  std::size_t imputed = 0;
  std::size_t clipped = 0;
};

Replicate make_replicate(const TrainingSetRequest& req, const SimulationLayout& layout, std::size_t k) {
  const RandomStream param_root = RandomStream(req.seed).child(stream_tag::kParameters).child(k);
  std::string last_error;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    RandomStream rng = param_root.child(static_cast<std::uint64_t>(attempt));
    Replicate r;
    r.theta = req.box.sample(rng);
    r.attempts = static_cast<std::size_t>(attempt);
    try {
      const CopulaSimulator sim(with_params(req.base, r.theta), coords_of(layout.sites), layout.n_days);
      const PanelDataset panel =
          simulate_censored(sim, layout, derive_seed(req.seed, stream_tag::kReplicate, k, static_cast<std::uint64_t>(attempt)));
      Features f = grid_features(chi_grid(panel, layout.grid));
      r.features = std::move(f.values);
      r.imputed = f.imputed;
      r.clipped = f.clipped;
      return r;
    } catch (const NumericalError& e) {
      last_error = e.what();
    } catch (const DomainError& e) {
      last_error = e.what();
    }
  }
  throw NumericalError("training replicate " + std::to_string(k) + " failed " + std::to_string(kMaxAttempts) +
                       " times: " + last_error);
}

TrainingSet assemble(const TrainingSetRequest& req, std::vector<Replicate>& reps) {
  TrainingSet ts;
  ts.input_size = reps.front().features.size();
  ts.inputs.reserve(reps.size() * ts.input_size);
  ts.targets.reserve(reps.size() * kNumDependenceParams);
  for (auto& r : reps) {
    ts.inputs.insert(ts.inputs.end(), r.features.begin(), r.features.end());
    const auto s = req.box.scale(r.theta);
    ts.targets.insert(ts.targets.end(), s.begin(), s.end());
    ts.thetas.push_back(r.theta);
    ts.resampled += r.attempts;
    ts.imputed_cells += r.imputed;
    ts.clipped += r.clipped;
  }
  std::vector<std::size_t> perm(reps.size());
  std::iota(perm.begin(), perm.end(), 0);
  RandomStream rng = RandomStream(req.seed).child(stream_tag::kSplit);
  for (std::size_t i = perm.size(); i > 1; --i) {
    const auto j = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(i)), i - 1);
    std::swap(perm[i - 1], perm[j]);
  }
  const auto n_val = static_cast<std::size_t>(std::floor(req.validation_fraction * static_cast<double>(perm.size())));
  ts.validation_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  ts.train_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::sort(ts.validation_rows.begin(), ts.validation_rows.end());
  std::sort(ts.train_rows.begin(), ts.train_rows.end());
  return ts;
}

void check_request(const TrainingSetRequest& req, const SimulationLayout& layout) {
  req.box.validate();
  if (req.k < 2) throw ConfigError("training set: K must be at least 2");
  if (!(req.validation_fraction >= 0.0 && req.validation_fraction < 1.0))
    throw ConfigError("training set: validation fraction must lie in [0, 1)");
  if (layout.sites.size() < 2 || layout.n_days == 0 || layout.n_years == 0)
    throw ConfigError("training set: layout needs two sites, one day and one year");
}

}  // namespace

void ParamBox::validate() const {
  for (std::size_t i = 0; i < kNumDependenceParams; ++i) {
    if (!(lo[i] < hi[i])) throw ConfigError(std::string("parameter box: lo < hi required for ") + kDependenceNames[i]);
  }
  if (lo[0] < 0.0 || hi[0] > 1.0) throw ConfigError("parameter box: delta must stay within [0, 1]");
  for (std::size_t i = 1; i < kNumDependenceParams; ++i)
    if (lo[i] < 0.0) throw ConfigError(std::string("parameter box: ") + kDependenceNames[i] + " must be positive");
}

DependenceParams ParamBox::scale(const DependenceParams& theta) const {
  DependenceParams s{};
  for (std::size_t i = 0; i < kNumDependenceParams; ++i) s[i] = (theta[i] - lo[i]) / (hi[i] - lo[i]);
  return s;
}

DependenceParams ParamBox::unscale(const DependenceParams& s) const {
  DependenceParams t{};
  for (std::size_t i = 0; i < kNumDependenceParams; ++i) t[i] = lo[i] + s[i] * (hi[i] - lo[i]);
  return t;
}

DependenceParams ParamBox::sample(RandomStream& rng) const {
  DependenceParams t{};
  for (std::size_t i = 0; i < kNumDependenceParams; ++i) t[i] = lo[i] + rng.uniform() * (hi[i] - lo[i]);
  return t;
}

bool ParamBox::contains(const DependenceParams& theta) const {
  for (std::size_t i = 0; i < kNumDependenceParams; ++i)
    if (!(theta[i] > lo[i] && theta[i] < hi[i])) return false;
  return true;
}

CopulaSpec with_params(CopulaSpec base, const DependenceParams& theta) {
  base.delta = theta[0];
  base.phi = theta[1];
  base.psi1 = theta[2];
  base.psi2 = theta[3];
  return base;
}

DependenceParams params_of(const CopulaSpec& spec) { return {spec.delta, spec.phi, spec.psi1, spec.psi2}; }

SimulationLayout::SimulationLayout(std::vector<Site> sites_, std::size_t n_days_, std::size_t n_years_,
                                   double censor_p_, GridConfig grid_)
    : sites(std::move(sites_)), n_days(n_days_), n_years(n_years_), censor_p(censor_p_), grid(std::move(grid_)) {
  if (!(censor_p >= 0.0 && censor_p < 1.0)) throw ConfigError("layout: censoring probability must lie in [0, 1)");
  grid.validate();
  if (grid.dist_edges.empty()) grid.dist_edges = default_distance_edges(coords_of(sites), grid.n_distance_bins);
  grid.n_distance_bins = grid.dist_edges.size() - 1;
}

PanelDataset simulate_censored(const CopulaSimulator& sim, const SimulationLayout& layout, std::uint64_t seed) {
  PanelDataset panel = simulate_copula(sim, layout.sites, layout.n_years, seed);
  if (layout.censor_p > 0.0) {
    for (std::size_t s = 0; s < panel.n_sites(); ++s)
      for (double& v : panel.site_series(s)) v = std::max(v, layout.censor_p);
  }
  return panel;
}

Features grid_features(const ChiGrid& grid) {
  Features f;
  f.values = grid.values;
  f.clipped = grid.clipped;
  for (double& v : f.values)
    if (std::isnan(v)) {
      v = 0.0;
      ++f.imputed;
    }
  return f;
}

TrainingSet generate_training_set(const TrainingSetRequest& req, const SimulationLayout& layout) {
  check_request(req, layout);
  std::vector<Replicate> reps(req.k);
  std::string error;
  bool failed = false;
  const auto k = static_cast<std::ptrdiff_t>(req.k);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < k; ++i) {
    try {
      reps[static_cast<std::size_t>(i)] = make_replicate(req, layout, static_cast<std::size_t>(i));
    } catch (const std::exception& e) {
#pragma omp critical
      if (!failed) {
        failed = true;
        error = e.what();
      }
    }
  }
  if (failed) throw NumericalError(error);
  return assemble(req, reps);
}

TrainingSet generate_training_set_serial(const TrainingSetRequest& req, const SimulationLayout& layout) {
  check_request(req, layout);
  std::vector<Replicate> reps;
  reps.reserve(req.k);
  for (std::size_t i = 0; i < req.k; ++i) reps.push_back(make_replicate(req, layout, i));
  return assemble(req, reps);
}

NetworkConfig default_network_config(const SimulationLayout& layout) {
  NetworkConfig c;
  c.in_channels = layout.grid.u_levels.size();
  c.height = layout.grid.dist_edges.size() - 1;
  c.width = layout.grid.lags.size();
  c.outputs = kNumDependenceParams;
  return c;
}

DependenceParams Estimator::estimate_features(std::span<const double> features) const {
  const auto out = network.predict(features);
  DependenceParams s{};
  constexpr double kEdge = 1e-12;
  for (std::size_t i = 0; i < kNumDependenceParams; ++i) s[i] = std::clamp(out[i], kEdge, 1.0 - kEdge);
  return box.unscale(s);
}

DependenceParams Estimator::estimate(const PanelDataset& data) const {
  if (data.n_sites() != layout.sites.size() || data.n_days() != layout.n_days)
    throw ShapeError("estimate: panel has " + std::to_string(data.n_sites()) + " sites x " +
                     std::to_string(data.n_days()) + " days, the estimator was trained on " +
                     std::to_string(layout.sites.size()) + " x " + std::to_string(layout.n_days));
  const Features f = grid_features(chi_grid(data, layout.grid));
  if (f.values.size() != network.config().input_size()) throw ShapeError("estimate: grid shape does not match the network");
  return estimate_features(f.values);
}

nlohmann::json Estimator::to_json() const {
  nlohmann::json box_json = {{"lo", box.lo}, {"hi", box.hi}};
  nlohmann::json layout_json = {{"sites", sites_to_json(layout.sites)},
                                {"n_days", layout.n_days},
                                {"n_years", layout.n_years},
                                {"censor_p", layout.censor_p},
                                {"grid", scalemix::to_json(layout.grid)}};
  nlohmann::json curve_json = {
      {"train_mae", curve.train_mae}, {"validation_mae", curve.validation_mae}, {"best_epoch", curve.best_epoch}};
  return {{"format", kFormatName}, {"version", kFormatVersion}, {"copula", scalemix::to_json(base)},
          {"box", box_json},       {"layout", layout_json},     {"curve", curve_json},
          {"network", network.to_json()}};
}

Estimator Estimator::from_json(const nlohmann::json& j) {
  Estimator e;
  try {
    if (j.at("format").get<std::string>() != kFormatName) throw IngestError("estimator file: unknown format");
    if (j.at("version").get<int>() != kFormatVersion) throw IngestError("estimator file: unsupported version");
    e.base = copula_spec_from_json(j.at("copula"));
    e.box.lo = j.at("box").at("lo").get<DependenceParams>();
    e.box.hi = j.at("box").at("hi").get<DependenceParams>();
    const auto& l = j.at("layout");
    e.layout = SimulationLayout(sites_from_json(l.at("sites")), l.at("n_days").get<std::size_t>(),
                                l.at("n_years").get<std::size_t>(), l.at("censor_p").get<double>(),
                                grid_config_from_json(l.at("grid")));
    const auto& c = j.at("curve");
    e.curve.train_mae = c.at("train_mae").get<std::vector<double>>();
    e.curve.validation_mae = c.at("validation_mae").get<std::vector<double>>();
    e.curve.best_epoch = c.at("best_epoch").get<std::size_t>();
    e.network = Network::from_json(j.at("network"));
  } catch (const nlohmann::json::exception& ex) {
    throw IngestError(std::string("estimator file: ") + ex.what());
  }
  return e;
}

void Estimator::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

Estimator Estimator::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

Estimator train_estimator(const TrainingSet& ts, const TrainingSetRequest& req, const SimulationLayout& layout,
                          const NetworkConfig& net_config, const TrainConfig& train_config,
                          const std::function<void(std::size_t, double, double)>& on_epoch) {
  if (ts.size() == 0) throw ConfigError("train: empty training set");
  if (ts.input_size != net_config.input_size()) throw ShapeError("train: training inputs do not match the network input");
  Estimator e;
  e.box = req.box;
  e.base = req.base;
  e.layout = layout;
  e.network = Network(net_config, train_config.seed);
  e.curve = train_network(e.network, ts.inputs, ts.targets, ts.train_rows, ts.validation_rows, train_config, on_epoch);
  return e;
}

BootstrapResult bootstrap(const Estimator& est, const DependenceParams& theta_d, const MarginalSpec& marginal,
                          const BootstrapRequest& req) {
  if (req.b == 0) throw ConfigError("bootstrap: B must be positive");
  if (!(req.level > 0.0 && req.level < 1.0)) throw ConfigError("bootstrap: level must lie in (0, 1)");
  if (req.refit_marginal) {
    marginal.validate();
    if (marginal.mu.size() != est.layout.sites.size()) throw ShapeError("bootstrap: one threshold per site required");
  }
  const SimulationLayout& layout = est.layout;
  const CopulaSimulator sim(with_params(est.base, theta_d), coords_of(layout.sites), layout.n_days);

  BootstrapResult res;
  for (std::size_t i = 0; i < kNumDependenceParams; ++i) res.point[i] = theta_d[i];
  res.point[4] = req.refit_marginal ? marginal.sigma : kNaN;
  res.point[5] = req.refit_marginal ? marginal.xi : kNaN;
  res.draws.assign(req.b, {kNaN, kNaN, kNaN, kNaN, kNaN, kNaN});
  std::vector<std::string> errors(req.b);

  const auto nb = static_cast<std::ptrdiff_t>(req.b);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t bi = 0; bi < nb; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    try {
      const PanelDataset uni = simulate_censored(sim, layout, derive_seed(req.seed, stream_tag::kReplicate, b));
      const DependenceParams th = est.estimate(uni);
      std::array<double, kNumAllParams> row{th[0], th[1], th[2], th[3], kNaN, kNaN};
      if (req.refit_marginal) {
        const PanelDataset data = to_data_scale(uni, marginal);
        const GpdFit g = fit_gpd_mle(pooled_exceedances(data, marginal.mu));
        row[4] = g.sigma;
        row[5] = g.xi;
      }
      res.draws[b] = row;
    } catch (const NumericalError& e) {
      errors[b] = e.what();
    } catch (const DomainError& e) {
      errors[b] = e.what();
    }
  }
  for (std::size_t b = 0; b < req.b; ++b)
    if (!errors[b].empty()) {
      ++res.failures;
      res.failure_messages.push_back("replicate " + std::to_string(b) + ": " + errors[b]);
    }
  const std::size_t ok = req.b - res.failures;
  if (static_cast<double>(ok) < 0.95 * static_cast<double>(req.b))
    throw EstimationError("bootstrap: only " + std::to_string(ok) + " of " + std::to_string(req.b) +
                          " replicates succeeded" + (res.failure_messages.empty() ? "" : "; first: " + res.failure_messages.front()));
  for (std::size_t p = 0; p < kNumAllParams; ++p) {
    std::vector<double> col;
    for (const auto& d : res.draws)
      if (!std::isnan(d[p])) col.push_back(d[p]);
    res.intervals[p] = col.empty() ? Interval{kNaN, kNaN} : percentile_interval(col, req.level);
  }
  return res;
}

}  // namespace scalemix
