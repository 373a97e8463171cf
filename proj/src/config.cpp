#include "scalemix/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "scalemix/errors.hpp"
#include "scalemix/serialize.hpp"

namespace scalemix {

namespace {

void allow_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

void read_path(const nlohmann::json& j, const char* key, std::filesystem::path& out, const std::filesystem::path& base,
               const std::string& where) {
  std::string s;
  read(j, key, s, where);
  if (j.contains(key)) out = resolve(s, base);
}

}  // namespace

MarginalSpec MarginalConfig::spec_for(const std::vector<Site>& sites) const {
  MarginalSpec m;
  m.p = p;
  m.sigma = sigma;
  m.xi = xi;
  if (!mu.empty()) {
    if (mu.size() != sites.size()) throw ConfigError("marginal.mu: one threshold per site required");
    m.mu = mu;
  } else {
    for (const auto& s : sites) m.mu.push_back(mu_plane[0] + mu_plane[1] * s.coord.x + mu_plane[2] * s.coord.y);
  }
  return m;
}

void RunConfig::validate() const {
  if (threads < 0) throw ConfigError("threads must be nonnegative");
  if (data.stations.empty() != data.values.empty()) throw ConfigError("data: give both stations and values files");
  if (!data.present()) {
    if (layout.n_sites < 3 || layout.n_sites > 30) throw ConfigError("layout.n_sites must lie in 3..30");
    if (layout.n_days < 2 || layout.n_years < 1) throw ConfigError("layout needs at least 2 days and 1 year");
  }
  try {
    copula.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("copula: ") + e.what());
  }
  if (!(marginal.p >= 0.0 && marginal.p < 1.0)) throw ConfigError("marginal.p must lie in [0, 1)");
  if (!(marginal.sigma > 0.0)) throw ConfigError("marginal.sigma must be positive");
  if (!(marginal.dry_fraction >= 0.0 && marginal.dry_fraction < 1.0)) throw ConfigError("marginal.dry_fraction must lie in [0, 1)");
  if (marginal.p > 0.0 && marginal.dry_fraction >= marginal.p)
    throw ConfigError("marginal.dry_fraction must be below marginal.p");
  box.validate();
  grid.validate();
  if (training.k < kMinTrainingK) throw ConfigError("training.k must be at least " + std::to_string(kMinTrainingK));
  if (!(training.validation_fraction >= 0.0 && training.validation_fraction < 1.0))
    throw ConfigError("training.validation_fraction must lie in [0, 1)");
  if (training.train.epochs == 0 || training.train.batch_size == 0) throw ConfigError("training: epochs and batch_size must be positive");
  const auto& o = training.train.optimizer;
  if (!(o.learning_rate > 0.0) || !(o.rho >= 0.0 && o.rho < 1.0) || !(o.epsilon > 0.0))
    throw ConfigError("training: invalid RMSprop settings");
  training.network.validate();
  if (bootstrap.b == 0) throw ConfigError("bootstrap.b must be positive");
  if (!(bootstrap.level > 0.0 && bootstrap.level < 1.0)) throw ConfigError("bootstrap.level must lie in (0, 1)");
  if (selection.candidates.empty()) throw ConfigError("selection.candidates must not be empty");
  if (selection.folds == 0 || selection.mc_simulations == 0 || selection.holdout_years == 0)
    throw ConfigError("selection: folds, mc_simulations and holdout_years must be positive");
  if (storm.n_days == 0 || storm.nx == 0 || storm.ny == 0) throw ConfigError("storm: lattice and day count must be positive");
  if (diagnose.block_bootstrap == 0) throw ConfigError("diagnose.block_bootstrap must be positive");
  if (!(diagnose.band_level > 0.0 && diagnose.band_level < 1.0)) throw ConfigError("diagnose.band_level must lie in (0, 1)");
  if (verify.modes.empty()) throw ConfigError("verify.modes must not be empty");
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  RunConfig c;
  allow_keys(j, "config", {"seed", "threads", "output_dir", "data", "layout", "copula", "marginal", "box", "grid",
                           "training", "bootstrap", "selection", "storm", "diagnose", "verify", "estimator"});
  read(j, "seed", c.seed, "config");
  read(j, "threads", c.threads, "config");
  read_path(j, "output_dir", c.output_dir, base, "config");
  read_path(j, "estimator", c.estimator, base, "config");

  if (j.contains("data")) {
    const auto& d = j["data"];
    allow_keys(d, "data", {"stations", "values", "scale"});
    read_path(d, "stations", c.data.stations, base, "data");
    read_path(d, "values", c.data.values, base, "data");
    std::string scale = "data";
    read(d, "scale", scale, "data");
    if (scale == "data")
      c.data.scale = ValueScale::Data;
    else if (scale == "uniform")
      c.data.scale = ValueScale::Uniform;
    else
      throw ConfigError("data.scale must be 'data' or 'uniform'");
  }
  if (j.contains("layout")) {
    const auto& l = j["layout"];
    allow_keys(l, "layout", {"n_sites", "n_days", "n_years", "site_seed"});
    read(l, "n_sites", c.layout.n_sites, "layout");
    read(l, "n_days", c.layout.n_days, "layout");
    read(l, "n_years", c.layout.n_years, "layout");
    read(l, "site_seed", c.layout.site_seed, "layout");
  }
  if (j.contains("copula")) {
    allow_keys(j["copula"], "copula",
               {"variant", "delta", "phi", "psi1", "psi2", "nu", "r_temporal_family", "w_temporal_family", "spatial_family"});
    c.copula = copula_spec_from_json(j["copula"], c.copula);
  }
  if (j.contains("marginal")) {
    const auto& m = j["marginal"];
    allow_keys(m, "marginal", {"p", "sigma", "xi", "mu_plane", "mu", "dry_fraction"});
    read(m, "p", c.marginal.p, "marginal");
    read(m, "sigma", c.marginal.sigma, "marginal");
    read(m, "xi", c.marginal.xi, "marginal");
    read(m, "mu_plane", c.marginal.mu_plane, "marginal");
    read(m, "mu", c.marginal.mu, "marginal");
    read(m, "dry_fraction", c.marginal.dry_fraction, "marginal");
  }
  if (j.contains("box")) {
    allow_keys(j["box"], "box", {"lo", "hi"});
    read(j["box"], "lo", c.box.lo, "box");
    read(j["box"], "hi", c.box.hi, "box");
  }
  if (j.contains("grid")) {
    allow_keys(j["grid"], "grid", {"u_levels", "n_distance_bins", "lags", "max_lag", "dist_edges"});
    c.grid = grid_config_from_json(j["grid"], c.grid);
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    allow_keys(t, "training", {"k", "validation_fraction", "epochs", "batch_size", "learning_rate", "rho", "epsilon",
                               "filters", "kernel", "dense"});
    read(t, "k", c.training.k, "training");
    read(t, "validation_fraction", c.training.validation_fraction, "training");
    read(t, "epochs", c.training.train.epochs, "training");
    read(t, "batch_size", c.training.train.batch_size, "training");
    read(t, "learning_rate", c.training.train.optimizer.learning_rate, "training");
    read(t, "rho", c.training.train.optimizer.rho, "training");
    read(t, "epsilon", c.training.train.optimizer.epsilon, "training");
    read(t, "filters", c.training.network.filters, "training");
    read(t, "kernel", c.training.network.kernel, "training");
    read(t, "dense", c.training.network.dense, "training");
  }
  if (j.contains("bootstrap")) {
    allow_keys(j["bootstrap"], "bootstrap", {"b", "level"});
    read(j["bootstrap"], "b", c.bootstrap.b, "bootstrap");
    read(j["bootstrap"], "level", c.bootstrap.level, "bootstrap");
  }
  if (j.contains("selection")) {
    const auto& s = j["selection"];
    allow_keys(s, "selection", {"candidates", "folds", "holdout_years", "mc_simulations"});
    if (s.contains("candidates")) {
      c.selection.candidates.clear();
      try {
        for (const auto& v : s["candidates"])
          c.selection.candidates.push_back(v.is_number_integer() ? variant_from_int(v.get<int>())
                                                                 : variant_from_string(v.get<std::string>()));
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("selection.candidates: expected model names");
      } catch (const DomainError& e) {
        throw ConfigError(std::string("selection.candidates: ") + e.what());
      }
    }
    read(s, "folds", c.selection.folds, "selection");
    read(s, "holdout_years", c.selection.holdout_years, "selection");
    read(s, "mc_simulations", c.selection.mc_simulations, "selection");
  }
  if (j.contains("storm")) {
    const auto& s = j["storm"];
    allow_keys(s, "storm", {"n_days", "nx", "ny", "margin_km", "max_cells", "report"});
    read(s, "n_days", c.storm.n_days, "storm");
    read(s, "nx", c.storm.nx, "storm");
    read(s, "ny", c.storm.ny, "storm");
    read(s, "margin_km", c.storm.margin_km, "storm");
    read(s, "max_cells", c.storm.max_cells, "storm");
    read_path(s, "report", c.storm.report, base, "storm");
  }
  if (j.contains("diagnose")) {
    const auto& d = j["diagnose"];
    allow_keys(d, "diagnose", {"block_bootstrap", "band_level", "chi_star_lags", "chi_star_u"});
    read(d, "block_bootstrap", c.diagnose.block_bootstrap, "diagnose");
    read(d, "band_level", c.diagnose.band_level, "diagnose");
    read(d, "chi_star_lags", c.diagnose.chi_star_lags, "diagnose");
    read(d, "chi_star_u", c.diagnose.chi_star_u, "diagnose");
  }
  if (j.contains("verify")) {
    const auto& v = j["verify"];
    allow_keys(v, "verify", {"modes", "u_levels", "replicates", "distance_km", "lag", "decay_ratio"});
    if (v.contains("modes")) {
      std::vector<std::string> modes;
      read(v, "modes", modes, "verify");
      c.verify.modes.clear();
      for (const auto& m : modes) c.verify.modes.push_back(dependence_mode_from_string(m));
    }
    read(v, "u_levels", c.verify.check.u_levels, "verify");
    read(v, "replicates", c.verify.check.n_replicates, "verify");
    read(v, "distance_km", c.verify.check.distance_km, "verify");
    read(v, "lag", c.verify.check.lag, "verify");
    read(v, "decay_ratio", c.verify.check.decay_ratio, "verify");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

nlohmann::json to_json(const RunConfig& c) {
  std::vector<std::string> candidates, modes;
  for (auto v : c.selection.candidates) candidates.push_back(to_string(v));
  for (auto m : c.verify.modes) modes.push_back(to_string(m));
  nlohmann::json j = {
      {"seed", c.seed},
      {"copula", to_json(c.copula)},
      {"marginal",
       {{"p", c.marginal.p},
        {"sigma", c.marginal.sigma},
        {"xi", c.marginal.xi},
        {"mu_plane", c.marginal.mu_plane},
        {"mu", c.marginal.mu},
        {"dry_fraction", c.marginal.dry_fraction}}},
      {"layout",
       {{"n_sites", c.layout.n_sites},
        {"n_days", c.layout.n_days},
        {"n_years", c.layout.n_years},
        {"site_seed", c.layout.site_seed}}},
      {"box", {{"lo", c.box.lo}, {"hi", c.box.hi}}},
      {"grid", to_json(c.grid)},
      {"training",
       {{"k", c.training.k},
        {"validation_fraction", c.training.validation_fraction},
        {"epochs", c.training.train.epochs},
        {"batch_size", c.training.train.batch_size},
        {"learning_rate", c.training.train.optimizer.learning_rate},
        {"rho", c.training.train.optimizer.rho},
        {"epsilon", c.training.train.optimizer.epsilon},
        {"filters", c.training.network.filters},
        {"kernel", c.training.network.kernel},
        {"dense", c.training.network.dense}}},
      {"bootstrap", {{"b", c.bootstrap.b}, {"level", c.bootstrap.level}}},
      {"selection",
       {{"candidates", candidates},
        {"folds", c.selection.folds},
        {"holdout_years", c.selection.holdout_years},
        {"mc_simulations", c.selection.mc_simulations}}},
      {"storm",
       {{"n_days", c.storm.n_days},
        {"nx", c.storm.nx},
        {"ny", c.storm.ny},
        {"margin_km", c.storm.margin_km},
        {"max_cells", c.storm.max_cells}}},
      {"diagnose",
       {{"block_bootstrap", c.diagnose.block_bootstrap},
        {"band_level", c.diagnose.band_level},
        {"chi_star_lags", c.diagnose.chi_star_lags},
        {"chi_star_u", c.diagnose.chi_star_u}}},
      {"verify",
       {{"modes", modes},
        {"u_levels", c.verify.check.u_levels},
        {"replicates", c.verify.check.n_replicates},
        {"distance_km", c.verify.check.distance_km},
        {"lag", c.verify.check.lag},
        {"decay_ratio", c.verify.check.decay_ratio}}},
  };
  return j;
}

}  // namespace scalemix
