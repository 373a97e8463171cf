#include "scalemix/serialize.hpp"

#include <cmath>

#include "scalemix/errors.hpp"

namespace scalemix {

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json to_json(const CopulaSpec& s) {
  return {{"variant", to_string(s.variant)},
          {"delta", s.delta},
          {"phi", s.phi},
          {"psi1", s.psi1},
          {"psi2", s.psi2},
          {"nu", s.nu},
          {"r_temporal_family", to_string(s.r_temporal_family)},
          {"w_temporal_family", to_string(s.w_temporal_family)},
          {"spatial_family", to_string(s.spatial_family)}};
}

CopulaSpec copula_spec_from_json(const nlohmann::json& j, CopulaSpec s) {
  if (!j.is_object()) throw ConfigError("copula: expected an object");
  try {
    if (j.contains("variant")) {
      const auto& v = j.at("variant");
      s.variant = v.is_number_integer() ? variant_from_int(v.get<int>()) : variant_from_string(v.get<std::string>());
    }
    if (j.contains("r_temporal_family")) s.r_temporal_family = temporal_family_from_string(j.at("r_temporal_family").get<std::string>());
    if (j.contains("w_temporal_family")) s.w_temporal_family = temporal_family_from_string(j.at("w_temporal_family").get<std::string>());
    if (j.contains("spatial_family")) s.spatial_family = spatial_family_from_string(j.at("spatial_family").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("copula: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("copula: ") + e.what());
  }
  read_if(j, "delta", s.delta);
  read_if(j, "phi", s.phi);
  read_if(j, "psi1", s.psi1);
  read_if(j, "psi2", s.psi2);
  read_if(j, "nu", s.nu);
  return s;
}

nlohmann::json to_json(const GridConfig& g) {
  return {{"u_levels", g.u_levels}, {"n_distance_bins", g.n_distance_bins}, {"lags", g.lags}, {"dist_edges", g.dist_edges}};
}

GridConfig grid_config_from_json(const nlohmann::json& j, GridConfig g) {
  if (!j.is_object()) throw ConfigError("grid: expected an object");
  read_if(j, "u_levels", g.u_levels);
  read_if(j, "n_distance_bins", g.n_distance_bins);
  read_if(j, "lags", g.lags);
  read_if(j, "dist_edges", g.dist_edges);
  if (j.contains("max_lag")) {
    int max_lag = 0;
    read_if(j, "max_lag", max_lag);
    if (max_lag < 0) throw ConfigError("grid: max_lag must be nonnegative");
    g.lags.clear();
    for (int k = 0; k <= max_lag; ++k) g.lags.push_back(k);
  }
  return g;
}

nlohmann::json to_json(const MarginalSpec& m) {
  return {{"p", m.p}, {"mu", m.mu}, {"sigma", m.sigma}, {"xi", m.xi}};
}

MarginalSpec marginal_spec_from_json(const nlohmann::json& j, MarginalSpec m) {
  if (!j.is_object()) throw ConfigError("marginal: expected an object");
  read_if(j, "p", m.p);
  read_if(j, "mu", m.mu);
  read_if(j, "sigma", m.sigma);
  read_if(j, "xi", m.xi);
  return m;
}

nlohmann::json sites_to_json(const std::vector<Site>& sites) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : sites) out.push_back({{"id", s.id}, {"x_km", s.coord.x}, {"y_km", s.coord.y}});
  return out;
}

std::vector<Site> sites_from_json(const nlohmann::json& j) {
  std::vector<Site> sites;
  try {
    for (const auto& s : j) sites.push_back({s.at("id").get<std::string>(), {s.at("x_km").get<double>(), s.at("y_km").get<double>()}});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sites: ") + e.what());
  }
  return sites;
}

}  // namespace scalemix
