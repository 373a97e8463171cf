#include "scalemix/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "scalemix/errors.hpp"
#include "scalemix/serialize.hpp"
#include "scalemix/stats.hpp"

namespace scalemix {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  return mix64(mix64(seed ^ mix64(tag)) + index);
}

// Purpose tags local to the pipelines.
constexpr std::uint64_t kTagSimulate = 0x53494d;
constexpr std::uint64_t kTagTrain = 0x5452;
constexpr std::uint64_t kTagBootstrap = 0x4253;
constexpr std::uint64_t kTagSelect = 0x534c;
constexpr std::uint64_t kTagDiagnose = 0x4447;

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::vector<Point2> coords_of(const std::vector<StormCell>& cells) {
  std::vector<Point2> out;
  for (const auto& c : cells) out.push_back(c.coord);
  return out;
}

nlohmann::json gpd_json(const GpdFit& g) {
  return {{"sigma", g.sigma},
          {"xi", g.xi},
          {"se_sigma", number_or_null(g.se_sigma)},
          {"se_xi", number_or_null(g.se_xi)},
          {"n_exceedances", g.n},
          {"log_likelihood", g.log_likelihood},
          {"at_boundary", g.at_boundary},
          {"note", g.note}};
}

}  // namespace

std::optional<PanelDataset> load_data(const RunConfig& config) {
  if (!config.data.present()) return std::nullopt;
  PanelDataset d = ingest(config.data.stations, config.data.values, config.data.scale);
  d.validate();
  return d;
}

std::vector<Site> run_sites(const RunConfig& config, const std::optional<PanelDataset>& data) {
  if (data) return data->sites();
  return province_like_sites(config.layout.n_sites, config.layout.site_seed);
}

double uniform_to_rain(double u, const MarginalSpec& spec, std::size_t site, double dry_fraction) {
  if (u > spec.p) return uniform_to_data(std::min(u, std::nextafter(1.0, 0.0)), spec, site);
  if (u <= dry_fraction) return 0.0;
  return spec.mu.at(site) * std::pow((u - dry_fraction) / (spec.p - dry_fraction), 1.5);
}

PanelDataset simulate_dataset(const RunConfig& config, const std::vector<Site>& sites, std::size_t n_days,
                              std::size_t n_years, std::uint64_t seed) {
  PanelDataset uni = simulate_copula(config.copula, sites, n_days, n_years, derive(seed, kTagSimulate));
  if (config.marginal.p == 0.0) return uni;
  const MarginalSpec spec = config.marginal.spec_for(sites);
  spec.validate();
  PanelDataset out = uni;
  out.set_scale(ValueScale::Data);
  for (std::size_t s = 0; s < sites.size(); ++s)
    for (std::size_t y = 0; y < n_years; ++y)
      for (std::size_t d = 0; d < n_days; ++d)
        out.set(y, d, s, uniform_to_rain(uni.value(y, d, s), spec, s, config.marginal.dry_fraction));
  return out;
}

SimulationLayout layout_for(const RunConfig& config, const PanelDataset& data, double censor_p) {
  return SimulationLayout(data.sites(), data.n_days(), data.n_years(), censor_p, config.grid);
}

Estimator train_for(const RunConfig& config, const SimulationLayout& layout, Variant variant, std::uint64_t seed,
                    const Logger& log) {
  TrainingSetRequest req;
  req.base = config.copula;
  req.base.variant = variant;
  req.box = config.box;
  req.k = config.training.k;
  req.validation_fraction = config.training.validation_fraction;
  req.seed = derive(seed, kTagTrain, static_cast<std::uint64_t>(variant));
  say(log, "training set: " + to_string(variant) + ", K=" + std::to_string(req.k) + ", " +
               std::to_string(layout.sites.size()) + " sites x " + std::to_string(layout.n_years) + " years x " +
               std::to_string(layout.n_days) + " days");
  const TrainingSet ts = generate_training_set(req, layout);
  say(log, "training set ready: " + std::to_string(ts.resampled) + " resampled draws, " +
               std::to_string(ts.imputed_cells) + " empty cells imputed, " + std::to_string(ts.clipped) +
               " pair estimates clipped");
  NetworkConfig net = config.training.network;
  const NetworkConfig shape = default_network_config(layout);
  net.in_channels = shape.in_channels;
  net.height = shape.height;
  net.width = shape.width;
  net.outputs = shape.outputs;
  TrainConfig tc = config.training.train;
  tc.seed = derive(req.seed, stream_tag::kWeights);
  Estimator e = train_estimator(ts, req, layout, net, tc, [&](std::size_t epoch, double tr, double va) {
    if (epoch % 10 == 0 || epoch == tc.epochs)
      say(log, "epoch " + std::to_string(epoch) + ": train MAE " + std::to_string(tr) + ", validation MAE " + std::to_string(va));
  });
  say(log, "network: " + std::to_string(e.network.parameter_count()) + " parameters, best epoch " +
               std::to_string(e.curve.best_epoch));
  return e;
}

Estimator obtain_estimator(const RunConfig& config, const SimulationLayout& layout, Variant variant,
                           std::uint64_t seed, const Logger& log, bool* trained) {
  if (config.estimator.empty()) {
    if (trained) *trained = true;
    return train_for(config, layout, variant, seed, log);
  }
  if (trained) *trained = false;
  Estimator e = Estimator::load(config.estimator);
  if (e.layout.sites.size() != layout.sites.size() || e.layout.n_days != layout.n_days)
    throw ShapeError("estimator " + config.estimator.string() + " was trained on " +
                     std::to_string(e.layout.sites.size()) + " sites x " + std::to_string(e.layout.n_days) +
                     " days; the data have " + std::to_string(layout.sites.size()) + " x " + std::to_string(layout.n_days));
  if (e.base.variant != variant)
    throw ConfigError("estimator " + config.estimator.string() + " is for " + to_string(e.base.variant) +
                      ", the config asks for " + to_string(variant));
  say(log, "loaded estimator " + config.estimator.string());
  return e;
}

FitResult pipeline_fit(const RunConfig& config, const PanelDataset& data, const Estimator& est, bool estimator_trained,
                       const Logger& log) {
  FitResult r;
  const double p = config.marginal.p;
  r.marginal_skipped = data.scale() == ValueScale::Uniform || p == 0.0;
  if (!r.marginal_skipped) {
    try {
      say(log, "step 1: threshold quantile regression at tau=" + std::to_string(p));
      r.thresholds = fit_threshold_qr(data, p);
      const auto exc = pooled_exceedances(data, r.thresholds.mu);
      say(log, "step 1: GPD fit on " + std::to_string(exc.size()) + " exceedances");
      r.gpd = fit_gpd_mle(exc);
    } catch (const UserError& e) {
      throw UserError(std::string("fit, marginal step: ") + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("fit, marginal step: ") + e.what());
    }
    r.marginal.p = p;
    r.marginal.mu = r.thresholds.mu;
    r.marginal.sigma = r.gpd.sigma;
    r.marginal.xi = r.gpd.xi;
  } else {
    say(log, "step 1 skipped: panel is on the uniform scale");
  }

  try {
    say(log, "step 2: chi grids and network estimate");
    r.grid = chi_grid(data, est.layout.grid);
    r.theta = est.estimate(data);
  } catch (const UserError& e) {
    throw UserError(std::string("fit, dependence step: ") + e.what());
  }

  BootstrapRequest breq;
  breq.b = config.bootstrap.b;
  breq.level = config.bootstrap.level;
  breq.seed = derive(config.seed, kTagBootstrap);
  breq.refit_marginal = !r.marginal_skipped;
  say(log, "bootstrap: B=" + std::to_string(breq.b));
  try {
    r.boot = bootstrap(est, r.theta, r.marginal, breq);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("fit, bootstrap step: ") + e.what());
  }
  if (!r.marginal_skipped) {
    r.boot.point[4] = r.gpd.sigma;
    r.boot.point[5] = r.gpd.xi;
  }

  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < kNumAllParams; ++i)
    params.push_back({{"name", kAllParamNames[i]},
                      {"estimate", number_or_null(r.boot.point[i])},
                      {"lower", number_or_null(r.boot.intervals[i].lo)},
                      {"upper", number_or_null(r.boot.intervals[i].hi)}});
  nlohmann::json marginal = {{"skipped", r.marginal_skipped}, {"threshold_probability", p}};
  if (!r.marginal_skipped) {
    marginal["qr_coefficients"] = r.thresholds.coefficients;
    marginal["qr_iterations"] = r.thresholds.iterations;
    marginal["thresholds"] = r.thresholds.mu;
    marginal["gpd"] = gpd_json(r.gpd);
  }
  r.report = {{"model", to_string(est.base.variant)},
              {"level", config.bootstrap.level},
              {"parameters", params},
              {"marginal", marginal},
              {"dependence",
               {{"grid_empty_cells", r.grid.empty_cells()},
                {"grid_clipped", r.grid.clipped},
                {"dist_edges", r.grid.dist_edges},
                {"lags", r.grid.lags},
                {"u_levels", r.grid.u_levels}}},
              {"bootstrap", {{"B", breq.b}, {"failures", r.boot.failures}, {"failure_messages", r.boot.failure_messages}}},
              {"estimator",
               {{"source", estimator_trained ? "trained" : "loaded"},
                {"parameter_count", est.network.parameter_count()},
                {"best_epoch", est.curve.best_epoch},
                {"validation_mae",
                 est.curve.best_epoch == 0 ? nlohmann::json(nullptr)
                                                  : nlohmann::json(est.curve.validation_mae[est.curve.best_epoch - 1])}}},
              {"data", {{"sites", data.n_sites()}, {"years", data.n_years()}, {"days", data.n_days()}, {"scale", to_string(data.scale())}}},
              {"config", to_json(config)}};
  return r;
}

double grid_rmse(const ChiGrid& a, const ChiGrid& b) {
  if (a.values.size() != b.values.size()) throw ShapeError("grid_rmse: grids differ in shape");
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (std::isnan(a.values[i]) || std::isnan(b.values[i])) continue;
    const double d = a.values[i] - b.values[i];
    ss += d * d;
    ++n;
  }
  return n == 0 ? kNaN : std::sqrt(ss / static_cast<double>(n));
}

ChiGrid mean_grid(const std::vector<ChiGrid>& grids) {
  if (grids.empty()) throw DomainError("mean_grid: no grids");
  ChiGrid out = grids.front();
  std::fill(out.values.begin(), out.values.end(), 0.0);
  std::vector<std::size_t> count(out.values.size(), 0);
  out.clipped = 0;
  for (const auto& g : grids) {
    if (g.values.size() != out.values.size()) throw ShapeError("mean_grid: grids differ in shape");
    out.clipped += g.clipped;
    for (std::size_t i = 0; i < g.values.size(); ++i)
      if (!std::isnan(g.values[i])) {
        out.values[i] += g.values[i];
        ++count[i];
      }
  }
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = count[i] == 0 ? kNaN : out.values[i] / static_cast<double>(count[i]);
  return out;
}

namespace {

void check_selection(const RunConfig& config, const PanelDataset& data) {
  const std::size_t n = data.n_years(), h = config.selection.holdout_years;
  if (n < 4) throw ConfigError("select: at least 4 years of data required");
  if (h + 2 > n)
    throw ConfigError("select: " + std::to_string(n) + " years cannot be split into a " + std::to_string(h) +
                      "-year held-out block and a training block of at least 2 years");
}

}  // namespace

std::vector<Estimator> train_selection_estimators(const RunConfig& config, const PanelDataset& data, const Logger& log) {
  check_selection(config, data);
  const double censor = data.scale() == ValueScale::Uniform && config.marginal.p == 0.0 ? 0.0 : config.marginal.p;
  const SimulationLayout layout(data.sites(), data.n_days(), data.n_years() - config.selection.holdout_years, censor,
                                config.grid);
  std::vector<Estimator> out;
  for (auto v : config.selection.candidates) out.push_back(train_for(config, layout, v, derive(config.seed, kTagSelect), log));
  return out;
}

SelectionResult pipeline_model_select(const RunConfig& config, const PanelDataset& data,
                                      const std::vector<Estimator>& estimators, const Logger& log) {
  check_selection(config, data);
  if (estimators.size() != config.selection.candidates.size())
    throw ConfigError("select: one estimator per candidate required");
  const std::size_t n = data.n_years(), h = config.selection.holdout_years;
  for (const auto& e : estimators)
    if (e.layout.sites.size() != data.n_sites() || e.layout.n_days != data.n_days())
      throw ShapeError("select: estimator layout does not match the data");

  SelectionResult res;
  res.candidates = config.selection.candidates;
  const std::size_t nc = estimators.size(), folds = config.selection.folds, nsim = config.selection.mc_simulations;
  res.rmse.assign(nc, std::vector<double>(folds, kNaN));
  const RandomStream split_root = RandomStream(config.seed).child(stream_tag::kSplit);
  const GridConfig& grid_cfg = estimators.front().layout.grid;

  for (std::size_t f = 0; f < folds; ++f) {
    RandomStream rng = split_root.child(f);
    std::vector<std::size_t> years(n);
    std::iota(years.begin(), years.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
      const auto j = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(i)), i - 1);
      std::swap(years[i - 1], years[j]);
    }
    std::vector<std::size_t> held(years.begin(), years.begin() + static_cast<std::ptrdiff_t>(h));
    std::vector<std::size_t> train(years.begin() + static_cast<std::ptrdiff_t>(h), years.end());
    std::sort(held.begin(), held.end());
    std::sort(train.begin(), train.end());
    const PanelDataset train_block = data.select_years(train);
    const ChiGrid held_grid = chi_grid(data.select_years(held), grid_cfg);

    for (std::size_t c = 0; c < nc; ++c) {
      const Estimator& est = estimators[c];
      const DependenceParams theta = est.estimate(train_block);
      SimulationLayout sim_layout = est.layout;
      sim_layout.n_years = h;
      std::vector<Point2> coords;
      for (const auto& s : sim_layout.sites) coords.push_back(s.coord);
      const CopulaSimulator sim(with_params(est.base, theta), coords, sim_layout.n_days);
      std::vector<ChiGrid> grids(nsim);
      const auto ns = static_cast<std::ptrdiff_t>(nsim);
#pragma omp parallel for schedule(dynamic, 4)
      for (std::ptrdiff_t s = 0; s < ns; ++s) {
        // Common random numbers across candidates within a fold.
        const PanelDataset p = simulate_censored(sim, sim_layout, derive(config.seed, kTagSelect, f * 1'000'003 + static_cast<std::size_t>(s)));
        grids[static_cast<std::size_t>(s)] = chi_grid(p, grid_cfg);
      }
      res.rmse[c][f] = grid_rmse(mean_grid(grids), held_grid);
    }
    if (log && ((f + 1) % 10 == 0 || f + 1 == folds)) {
      std::string msg = "fold " + std::to_string(f + 1) + "/" + std::to_string(folds) + ":";
      for (std::size_t c = 0; c < nc; ++c) msg += " " + to_string(res.candidates[c]) + "=" + std::to_string(res.rmse[c][f]);
      say(log, msg);
    }
  }

  nlohmann::json models = nlohmann::json::array();
  for (std::size_t c = 0; c < nc; ++c) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (double v : res.rmse[c])
      if (!std::isnan(v)) {
        sum += v;
        ++cnt;
      }
    res.mean_rmse.push_back(cnt == 0 ? kNaN : sum / static_cast<double>(cnt));
    nlohmann::json per_fold = nlohmann::json::array();
    for (double v : res.rmse[c]) per_fold.push_back(number_or_null(v));
    models.push_back({{"model", to_string(res.candidates[c])}, {"mean_rmse", number_or_null(res.mean_rmse.back())}, {"rmse", per_fold}});
  }
  const auto best = static_cast<std::size_t>(std::min_element(res.mean_rmse.begin(), res.mean_rmse.end()) - res.mean_rmse.begin());
  res.report = {{"models", models},
                {"selected", to_string(res.candidates[best])},
                {"folds", folds},
                {"holdout_years", h},
                {"mc_simulations", nsim},
                {"config", to_json(config)}};
  return res;
}

std::vector<StormCell> storm_cells(const RunConfig& config, const std::vector<Site>& sites,
                                   const std::array<double, 3>& mu_plane, std::span<const double> site_mu) {
  const auto& sc = config.storm;
  const std::size_t total = sc.nx * sc.ny + sites.size();
  if (total > sc.max_cells)
    throw SizeError("storm: " + std::to_string(total) + " cells exceed the limit of " + std::to_string(sc.max_cells) +
                    " (storm.max_cells)");
  if (sites.empty()) throw LayoutError("storm: no sites");
  if (!site_mu.empty() && site_mu.size() != sites.size()) throw ShapeError("storm: one threshold per site required");
  double x0 = sites[0].coord.x, x1 = x0, y0 = sites[0].coord.y, y1 = y0;
  for (const auto& s : sites) {
    x0 = std::min(x0, s.coord.x);
    x1 = std::max(x1, s.coord.x);
    y0 = std::min(y0, s.coord.y);
    y1 = std::max(y1, s.coord.y);
  }
  x0 -= sc.margin_km;
  x1 += sc.margin_km;
  y0 -= sc.margin_km;
  y1 += sc.margin_km;
  auto plane = [&](Point2 p) { return mu_plane[0] + mu_plane[1] * p.x + mu_plane[2] * p.y; };
  std::vector<StormCell> cells;
  cells.reserve(total);
  for (std::size_t j = 0; j < sc.ny; ++j)
    for (std::size_t i = 0; i < sc.nx; ++i) {
      const Point2 p{x0 + (x1 - x0) * (static_cast<double>(i) + 0.5) / static_cast<double>(sc.nx),
                     y0 + (y1 - y0) * (static_cast<double>(j) + 0.5) / static_cast<double>(sc.ny)};
      const bool clash = std::any_of(sites.begin(), sites.end(), [&](const Site& s) { return s.coord.x == p.x && s.coord.y == p.y; });
      if (!clash) cells.push_back({false, "", p, plane(p)});
    }
  for (std::size_t s = 0; s < sites.size(); ++s)
    cells.push_back({true, sites[s].id, sites[s].coord, site_mu.empty() ? plane(sites[s].coord) : site_mu[s]});
  return cells;
}

StormResult pipeline_storm(const RunConfig& config, const CopulaSpec& spec, const MarginalSpec& marginal,
                           const std::vector<StormCell>& cells, std::uint64_t seed) {
  StormResult r;
  r.cells = cells;
  r.n_days = config.storm.n_days;
  const std::size_t n = cells.size(), t = r.n_days;
  const CopulaSimulator sim(spec, coords_of(cells), t);
  r.uniform.resize(n * t);
  sim.simulate_uniform(year_stream(seed, 0), r.uniform);
  MarginalSpec m = marginal;
  m.mu.clear();
  for (const auto& c : cells) m.mu.push_back(c.mu);
  m.validate();
  r.values.resize(n * t);
  r.lattice_exceed_fraction.assign(t, 0.0);
  std::size_t n_lattice = 0;
  for (const auto& c : cells) n_lattice += !c.is_site;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < t; ++d) {
      const double u = std::min(r.uniform[i * t + d], std::nextafter(1.0, 0.0));
      r.values[i * t + d] = u <= m.p ? m.mu[i] : uniform_to_data(u, m, i);
      if (!cells[i].is_site && u > m.p) r.lattice_exceed_fraction[d] += 1.0;
    }
  for (auto& f : r.lattice_exceed_fraction) f = n_lattice == 0 ? kNaN : f / static_cast<double>(n_lattice);
  return r;
}

void write_storm_csv(std::ostream& out, const StormResult& r) {
  out << "kind,site_id,x_km,y_km,day,value,mu,exceeds\n";
  char buf[256];
  for (std::size_t i = 0; i < r.cells.size(); ++i)
    for (std::size_t d = 0; d < r.n_days; ++d) {
      const auto& c = r.cells[i];
      const double v = r.values[i * r.n_days + d];
      std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%zu,%.6f,%.6f,%d\n", c.is_site ? "site" : "lattice",
                    c.site_id.c_str(), c.coord.x, c.coord.y, d + 1, v, c.mu, v > c.mu ? 1 : 0);
      out << buf;
    }
}

PanelDataset resample_years(const PanelDataset& data, RandomStream& rng) {
  std::vector<std::size_t> years(data.n_years());
  for (auto& y : years)
    y = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(data.n_years())), data.n_years() - 1);
  return data.select_years(years);
}

DiagnoseResult pipeline_diagnose(const RunConfig& config, const PanelDataset& data, const Logger& log) {
  DiagnoseResult r;
  const double p = config.marginal.p;
  const bool marginal = data.scale() == ValueScale::Data && p > 0.0;
  nlohmann::json site_rows = nlohmann::json::array();
  if (marginal) {
    r.thresholds = fit_threshold_qr(data, p);
    say(log, "per-site GPD fits");
    r.site_gpd.resize(data.n_sites());
    for (std::size_t s = 0; s < data.n_sites(); ++s) {
      std::vector<double> exc;
      const auto series = data.site_series(s);
      const auto mask = data.site_mask(s);
      for (std::size_t k = 0; k < series.size(); ++k)
        if (mask[k] && series[k] > r.thresholds.mu[s]) exc.push_back(series[k] - r.thresholds.mu[s]);
      nlohmann::json row = {{"site_id", data.sites()[s].id}, {"mu", r.thresholds.mu[s]}, {"n_exceedances", exc.size()}};
      if (exc.size() >= 30) {
        try {
          r.site_gpd[s] = fit_gpd_mle(exc);
        } catch (const NumericalError& e) {
          row["error"] = e.what();
        } catch (const UserError& e) {
          row["error"] = e.what();
        }
      }
      if (r.site_gpd[s]) row["gpd"] = gpd_json(*r.site_gpd[s]);
      site_rows.push_back(row);
    }
    r.pooled_gpd = fit_gpd_mle(pooled_exceedances(data, r.thresholds.mu));
  }

  say(log, "chi grid with " + std::to_string(config.diagnose.block_bootstrap) + " year-block bootstrap replicates");
  r.grid = chi_grid(data, config.grid);
  const std::size_t nb = config.diagnose.block_bootstrap;
  std::vector<ChiGrid> boots(nb);
  const RandomStream root = RandomStream(derive(config.seed, kTagDiagnose)).child(stream_tag::kReplicate);
  GridConfig fixed = config.grid;
  fixed.dist_edges = r.grid.dist_edges;
  const auto nbi = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(dynamic, 2)
  for (std::ptrdiff_t b = 0; b < nbi; ++b) {
    RandomStream rng = root.child(static_cast<std::uint64_t>(b));
    boots[static_cast<std::size_t>(b)] = chi_grid(resample_years(data, rng), fixed);
  }
  r.band_lo.assign(r.grid.values.size(), kNaN);
  r.band_hi.assign(r.grid.values.size(), kNaN);
  for (std::size_t c = 0; c < r.grid.values.size(); ++c) {
    std::vector<double> col;
    for (const auto& g : boots)
      if (!std::isnan(g.values[c])) col.push_back(g.values[c]);
    if (col.empty()) continue;
    const Interval iv = percentile_interval(col, config.diagnose.band_level);
    r.band_lo[c] = iv.lo;
    r.band_hi[c] = iv.hi;
  }

  nlohmann::json star = nlohmann::json::object();
  if (data.n_sites() >= 5) {
    for (int lag : config.diagnose.chi_star_lags) {
      std::vector<double> v;
      for (std::size_t s = 0; s < data.n_sites(); ++s) v.push_back(chi_star(data, s, lag, config.diagnose.chi_star_u));
      nlohmann::json arr = nlohmann::json::array();
      for (double x : v) arr.push_back(number_or_null(x));
      star["lag_" + std::to_string(lag)] = arr;
      r.chi_star.push_back(std::move(v));
    }
  }

  r.report = {{"marginal_modelled", marginal},
              {"sites", site_rows},
              {"chi_star_u", config.diagnose.chi_star_u},
              {"chi_star", star},
              {"grid_empty_cells", r.grid.empty_cells()},
              {"grid_clipped", r.grid.clipped},
              {"block_bootstrap", nb},
              {"band_level", config.diagnose.band_level},
              {"config", to_json(config)}};
  if (marginal) {
    r.report["qr_coefficients"] = r.thresholds.coefficients;
    r.report["pooled_gpd"] = gpd_json(*r.pooled_gpd);
  }
  return r;
}

std::filesystem::path make_versioned_dir(const std::filesystem::path& root, const std::string& name) {
  std::filesystem::create_directories(root);
  for (int i = 1; i < 100000; ++i) {
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "-%03d", i);
    const auto dir = root / (name + suffix);
    if (std::filesystem::create_directory(dir)) return dir;
  }
  throw ConfigError("no free output directory under " + root.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace scalemix
