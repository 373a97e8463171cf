// scalemix command-line front end.
#include <omp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "scalemix/config.hpp"
#include "scalemix/errors.hpp"
#include "scalemix/pipelines.hpp"
#include "scalemix/serialize.hpp"

using namespace scalemix;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitNumerical = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  bool quiet = false;
};

struct Overrides {
  std::string variant;
  std::optional<double> delta;
  std::optional<std::size_t> years, days, sites, k, epochs, b, folds, mc, blocks, replicates;
  std::string estimator, report, modes;
};

RunConfig resolve(const Common& c, const Overrides& o) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.threads) cfg.threads = *c.threads;
  if (!o.variant.empty()) cfg.copula.variant = variant_from_string(o.variant);
  if (o.delta) cfg.copula.delta = *o.delta;
  if (o.years) cfg.layout.n_years = *o.years;
  if (o.days) cfg.layout.n_days = *o.days;
  if (o.sites) cfg.layout.n_sites = *o.sites;
  if (o.k) cfg.training.k = *o.k;
  if (o.epochs) cfg.training.train.epochs = *o.epochs;
  if (o.b) cfg.bootstrap.b = *o.b;
  if (o.folds) cfg.selection.folds = *o.folds;
  if (o.mc) cfg.selection.mc_simulations = *o.mc;
  if (o.blocks) cfg.diagnose.block_bootstrap = *o.blocks;
  if (o.replicates) cfg.verify.check.n_replicates = *o.replicates;
  if (!o.estimator.empty()) cfg.estimator = o.estimator;
  if (!o.report.empty()) cfg.storm.report = o.report;
  if (!o.modes.empty()) {
    cfg.verify.modes.clear();
    std::size_t start = 0;
    while (start <= o.modes.size()) {
      const auto comma = o.modes.find(',', start);
      const auto part = o.modes.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!part.empty()) cfg.verify.modes.push_back(dependence_mode_from_string(part));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  cfg.validate();
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  return cfg;
}

Logger make_logger(bool quiet) {
  if (quiet) return {};
  return [](const std::string& m) { std::cerr << "[scalemix] " << m << '\n'; };
}

PanelDataset require_data(const RunConfig& cfg, const std::string& cmd) {
  auto data = load_data(cfg);
  if (!data) throw ConfigError(cmd + ": the config must name data.stations and data.values");
  return std::move(*data);
}

void write_grid_with_bands(const std::filesystem::path& path, const ChiGrid& g, const std::vector<double>& lo,
                           const std::vector<double>& hi) {
  std::ofstream out(path);
  out << "level,u,dist_lo,dist_hi,lag,chi,band_lo,band_hi,n_pairs\n";
  out.precision(17);
  auto put = [&](double v) {
    if (std::isnan(v))
      out << "nan";
    else
      out << v;
  };
  for (std::size_t l = 0; l < g.n_levels(); ++l)
    for (std::size_t b = 0; b < g.m1(); ++b)
      for (std::size_t k = 0; k < g.m2(); ++k) {
        const std::size_t c = g.cell(l, b, k);
        out << l << ',' << g.u_levels[l] << ',' << g.dist_edges[b] << ',' << g.dist_edges[b + 1] << ',' << g.lags[k] << ',';
        put(g.values[c]);
        out << ',';
        put(lo[c]);
        out << ',';
        put(hi[c]);
        out << ',' << g.n_pairs[c] << '\n';
      }
}

void write_draws(const std::filesystem::path& path, const BootstrapResult& r) {
  std::ofstream out(path);
  out << "replicate";
  for (const char* n : kAllParamNames) out << ',' << n;
  out << '\n';
  out.precision(17);
  for (std::size_t b = 0; b < r.draws.size(); ++b) {
    out << b;
    for (double v : r.draws[b]) {
      out << ',';
      if (std::isnan(v))
        out << "nan";
      else
        out << v;
    }
    out << '\n';
  }
}

void write_thresholds(const std::filesystem::path& path, const std::vector<Site>& sites, const std::vector<double>& mu) {
  std::ofstream out(path);
  out << "site_id,mu\n";
  out.precision(17);
  for (std::size_t s = 0; s < sites.size(); ++s) out << sites[s].id << ',' << mu[s] << '\n';
}

void write_loss_curve(const std::filesystem::path& path, const LossCurve& c) {
  std::ofstream out(path);
  out << "epoch,train_mae,validation_mae\n";
  out.precision(17);
  for (std::size_t e = 0; e < c.train_mae.size(); ++e) out << e + 1 << ',' << c.train_mae[e] << ',' << c.validation_mae[e] << '\n';
}

double censor_for(const RunConfig& cfg, const PanelDataset& data) {
  return data.scale() == ValueScale::Uniform && cfg.marginal.p == 0.0 ? 0.0 : cfg.marginal.p;
}

int cmd_simulate(const RunConfig& cfg, const Logger& log) {
  const auto sites = province_like_sites(cfg.layout.n_sites, cfg.layout.site_seed);
  const PanelDataset panel = simulate_dataset(cfg, sites, cfg.layout.n_days, cfg.layout.n_years, cfg.seed);
  const auto dir = make_versioned_dir(cfg.output_dir, "simulate");
  export_panel(panel, dir / "stations.csv", dir / "values.csv");
  write_json(dir / "simulation.json", {{"scale", to_string(panel.scale())}, {"config", to_json(cfg)}});
  log("wrote " + dir.string());
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, const Logger& log) {
  const auto data = load_data(cfg);
  SimulationLayout layout;
  if (data) {
    layout = layout_for(cfg, *data, censor_for(cfg, *data));
  } else {
    layout = SimulationLayout(province_like_sites(cfg.layout.n_sites, cfg.layout.site_seed), cfg.layout.n_days,
                              cfg.layout.n_years, cfg.marginal.p, cfg.grid);
  }
  const Estimator est = train_for(cfg, layout, cfg.copula.variant, cfg.seed, log);
  const auto dir = make_versioned_dir(cfg.output_dir, "train");
  est.save(dir / "estimator.json");
  write_loss_curve(dir / "loss_curve.csv", est.curve);
  write_json(dir / "training.json", {{"model", to_string(cfg.copula.variant)},
                                     {"parameter_count", est.network.parameter_count()},
                                     {"best_epoch", est.curve.best_epoch},
                                     {"config", to_json(cfg)}});
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_fit(const RunConfig& cfg, const Logger& log) {
  const PanelDataset data = require_data(cfg, "fit");
  bool trained = false;
  const Estimator est =
      obtain_estimator(cfg, layout_for(cfg, data, censor_for(cfg, data)), cfg.copula.variant, cfg.seed, log, &trained);
  const FitResult r = pipeline_fit(cfg, data, est, trained, log);
  const auto dir = make_versioned_dir(cfg.output_dir, "fit");
  write_json(dir / "report.json", r.report);
  write_draws(dir / "bootstrap_draws.csv", r.boot);
  {
    std::ofstream g(dir / "chi_grid.csv");
    write_chi_grid_csv(g, r.grid);
  }
  if (!r.marginal_skipped) write_thresholds(dir / "thresholds.csv", data.sites(), r.thresholds.mu);
  if (trained) est.save(dir / "estimator.json");
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_bootstrap(const RunConfig& cfg, const Logger& log) {
  const auto data = load_data(cfg);
  const auto sites = run_sites(cfg, data);
  const std::size_t days = data ? data->n_days() : cfg.layout.n_days;
  const std::size_t years = data ? data->n_years() : cfg.layout.n_years;
  const SimulationLayout layout(sites, days, years, cfg.marginal.p, cfg.grid);
  const Estimator est = obtain_estimator(cfg, layout, cfg.copula.variant, cfg.seed, log);
  BootstrapRequest req;
  req.b = cfg.bootstrap.b;
  req.level = cfg.bootstrap.level;
  req.seed = mix64(cfg.seed ^ 0x4253);
  req.refit_marginal = cfg.marginal.p > 0.0;
  const MarginalSpec m = cfg.marginal.spec_for(sites);
  const BootstrapResult r = bootstrap(est, params_of(cfg.copula), m, req);
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < kNumAllParams; ++i)
    params.push_back({{"name", kAllParamNames[i]},
                      {"point", number_or_null(r.point[i])},
                      {"lower", number_or_null(r.intervals[i].lo)},
                      {"upper", number_or_null(r.intervals[i].hi)}});
  const auto dir = make_versioned_dir(cfg.output_dir, "bootstrap");
  write_json(dir / "bootstrap.json", {{"model", to_string(est.base.variant)},
                                      {"B", req.b},
                                      {"level", req.level},
                                      {"failures", r.failures},
                                      {"parameters", params},
                                      {"config", to_json(cfg)}});
  write_draws(dir / "bootstrap_draws.csv", r);
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_select(const RunConfig& cfg, const Logger& log) {
  const PanelDataset data = require_data(cfg, "select");
  const auto ests = train_selection_estimators(cfg, data, log);
  const SelectionResult r = pipeline_model_select(cfg, data, ests, log);
  const auto dir = make_versioned_dir(cfg.output_dir, "select");
  write_json(dir / "selection.json", r.report);
  {
    std::ofstream out(dir / "rmse.csv");
    out << "model,fold,rmse\n";
    out.precision(17);
    for (std::size_t c = 0; c < r.candidates.size(); ++c)
      for (std::size_t f = 0; f < r.rmse[c].size(); ++f) out << to_string(r.candidates[c]) << ',' << f + 1 << ',' << r.rmse[c][f] << '\n';
  }
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_diagnose(const RunConfig& cfg, const Logger& log) {
  const PanelDataset data = require_data(cfg, "diagnose");
  const DiagnoseResult r = pipeline_diagnose(cfg, data, log);
  const auto dir = make_versioned_dir(cfg.output_dir, "diagnose");
  write_json(dir / "diagnostics.json", r.report);
  write_grid_with_bands(dir / "chi_grid.csv", r.grid, r.band_lo, r.band_hi);
  if (!r.site_gpd.empty()) {
    write_thresholds(dir / "thresholds.csv", data.sites(), r.thresholds.mu);
    std::ofstream out(dir / "site_gpd.csv");
    out << "site_id,sigma,sigma_lo95,sigma_hi95,xi,xi_lo95,xi_hi95\n";
    out.precision(10);
    for (std::size_t s = 0; s < r.site_gpd.size(); ++s) {
      out << data.sites()[s].id;
      if (const auto& g = r.site_gpd[s]) {
        out << ',' << g->sigma << ',' << g->sigma - 1.96 * g->se_sigma << ',' << g->sigma + 1.96 * g->se_sigma << ','
            << g->xi << ',' << g->xi - 1.96 * g->se_xi << ',' << g->xi + 1.96 * g->se_xi;
      } else {
        out << ",nan,nan,nan,nan,nan,nan";
      }
      out << '\n';
    }
  }
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, const Logger& log) {
  ClassCheckConfig check = cfg.verify.check;
  check.seed = cfg.seed;
  log("verifying " + to_string(cfg.copula.variant) + " at delta=" + std::to_string(cfg.copula.delta) + " with " +
      std::to_string(check.n_replicates) + " replicates per mode");
  const ClassReport r = verify_dependence_class(cfg.copula, cfg.verify.modes, check);
  const auto dir = make_versioned_dir(cfg.output_dir, "verify-classes");
  nlohmann::json j = class_report_to_json(r);
  j["config"] = to_json(cfg);
  write_json(dir / "classes.json", j);
  for (const auto& c : r.checks) {
    std::printf("%-9s expected %s  observed %s  chi:", to_string(c.mode).c_str(), to_string(c.expected).c_str(),
                to_string(c.verdict).c_str());
    for (std::size_t l = 0; l < c.chi.size(); ++l) std::printf(" %.4f(%.4f)", c.chi[l], c.se[l]);
    std::printf("  %s\n", c.agrees() ? "agree" : "DISAGREE");
  }
  std::cout << dir.string() << '\n';
  return kExitOk;
}

int cmd_storm(const RunConfig& cfg, const Logger& log) {
  const auto data = load_data(cfg);
  const auto sites = run_sites(cfg, data);
  CopulaSpec spec = cfg.copula;
  MarginalSpec marginal = cfg.marginal.spec_for(sites);
  std::array<double, 3> plane = cfg.marginal.mu_plane;
  std::vector<double> site_mu = cfg.marginal.mu;
  if (!cfg.storm.report.empty()) {
    std::ifstream in(cfg.storm.report);
    if (!in) throw ConfigError("storm: cannot read report " + cfg.storm.report.string());
    nlohmann::json rep;
    try {
      in >> rep;
      for (const auto& p : rep.at("parameters")) {
        const auto name = p.at("name").get<std::string>();
        if (p.at("estimate").is_null()) continue;
        const double v = p.at("estimate").get<double>();
        if (name == "delta") spec.delta = v;
        if (name == "phi") spec.phi = v;
        if (name == "psi1") spec.psi1 = v;
        if (name == "psi2") spec.psi2 = v;
        if (name == "sigma") marginal.sigma = v;
        if (name == "xi") marginal.xi = v;
      }
      spec.variant = variant_from_string(rep.at("model").get<std::string>());
      const auto& m = rep.at("marginal");
      if (!m.at("skipped").get<bool>()) {
        plane = m.at("qr_coefficients").get<std::array<double, 3>>();
        site_mu = m.at("thresholds").get<std::vector<double>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("storm: malformed report: ") + e.what());
    }
  }
  if (!(marginal.p > 0.0)) throw ConfigError("storm: marginal.p must be positive");
  const auto cells = storm_cells(cfg, sites, plane, site_mu);
  log("storm: " + std::to_string(cells.size()) + " cells x " + std::to_string(cfg.storm.n_days) + " days");
  const StormResult r = pipeline_storm(cfg, spec, marginal, cells, cfg.seed);
  const auto dir = make_versioned_dir(cfg.output_dir, "storm");
  {
    std::ofstream out(dir / "storm.csv");
    write_storm_csv(out, r);
  }
  nlohmann::json frac = nlohmann::json::array();
  for (double f : r.lattice_exceed_fraction) frac.push_back(number_or_null(f));
  write_json(dir / "storm.json", {{"copula", to_json(spec)},
                                  {"sigma", marginal.sigma},
                                  {"xi", marginal.xi},
                                  {"p", marginal.p},
                                  {"cells", cells.size()},
                                  {"lattice_exceed_fraction", frac},
                                  {"config", to_json(cfg)}});
  std::cout << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time extremes with random scale mixtures: simulation, neural estimation, diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "scalemix 1.0");
  Common common;
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Master seed (overrides the config)");
    sub->add_option("--out", common.out, "Output root; each run writes a fresh <command>-NNN directory");
    sub->add_option("--threads", common.threads, "OpenMP threads (0: default)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--quiet", common.quiet, "No progress messages");
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate a panel on the configured layout");
  add_common(simulate);
  simulate->add_option("--variant", o.variant, "Model M1..M8");
  simulate->add_option("--delta", o.delta, "Mixing exponent delta");
  simulate->add_option("--years", o.years, "Number of years");
  simulate->add_option("--days", o.days, "Days per year");
  simulate->add_option("--sites", o.sites, "Number of sites (at most 30)");

  auto* train = app.add_subcommand("train", "Generate a training set and train the estimator network");
  add_common(train);
  train->add_option("--variant", o.variant, "Model M1..M8");
  train->add_option("--k", o.k, "Training-set size K");
  train->add_option("--epochs", o.epochs, "Training epochs");

  auto* fit = app.add_subcommand("fit", "Two-step fit with bootstrap intervals");
  add_common(fit);
  fit->add_option("--variant", o.variant, "Model M1..M8");
  fit->add_option("--estimator", o.estimator, "Trained estimator file");
  fit->add_option("--k", o.k, "Training-set size K when training on the fly");
  fit->add_option("--b", o.b, "Bootstrap replicates");

  auto* boot = app.add_subcommand("bootstrap", "Parametric bootstrap at the configured parameters");
  add_common(boot);
  boot->add_option("--variant", o.variant, "Model M1..M8");
  boot->add_option("--estimator", o.estimator, "Trained estimator file");
  boot->add_option("--b", o.b, "Bootstrap replicates");

  auto* select = app.add_subcommand("select", "Cross-validated model selection by chi-grid RMSE");
  add_common(select);
  select->add_option("--folds", o.folds, "Number of random year splits");
  select->add_option("--mc", o.mc, "Monte Carlo simulations per fold");
  select->add_option("--k", o.k, "Training-set size K");

  auto* diagnose = app.add_subcommand("diagnose", "Per-site GPD fits, chi grid bands and chi* diagnostics");
  add_common(diagnose);
  diagnose->add_option("--blocks", o.blocks, "Year-block bootstrap replicates");

  auto* verify = app.add_subcommand("verify-classes", "Monte Carlo check of the extremal dependence class");
  add_common(verify);
  verify->add_option("--variant", o.variant, "Model M1..M8");
  verify->add_option("--delta", o.delta, "Mixing exponent delta");
  verify->add_option("--replicates", o.replicates, "Pair replicates per mode");
  verify->add_option("--modes", o.modes, "Comma-separated subset of space,time,spacetime");

  auto* storm = app.add_subcommand("storm", "Simulate consecutive days on a prediction lattice");
  add_common(storm);
  storm->add_option("--report", o.report, "Fit report supplying the parameters");
  storm->add_option("--variant", o.variant, "Model M1..M8");
  storm->add_option("--delta", o.delta, "Mixing exponent delta");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUser;
  }

  try {
    const RunConfig cfg = resolve(common, o);
    const Logger log = make_logger(common.quiet);
    const Logger always = log ? log : Logger([](const std::string&) {});
    if (simulate->parsed()) return cmd_simulate(cfg, always);
    if (train->parsed()) return cmd_train(cfg, always);
    if (fit->parsed()) return cmd_fit(cfg, always);
    if (boot->parsed()) return cmd_bootstrap(cfg, always);
    if (select->parsed()) return cmd_select(cfg, always);
    if (diagnose->parsed()) return cmd_diagnose(cfg, always);
    if (verify->parsed()) return cmd_verify(cfg, always);
    if (storm->parsed()) return cmd_storm(cfg, always);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUser;
  }
  return kExitUser;
}
