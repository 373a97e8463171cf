#pragma once

#include <vector>

#include "json.hpp"

#include "scalemix/copula.hpp"
#include "scalemix/marginal.hpp"
#include "scalemix/panel.hpp"
#include "scalemix/tail_stats.hpp"

namespace scalemix {

// Readers start from `base` and override only the keys present; they throw ConfigError
// on wrong types or unknown enumerators.

nlohmann::json to_json(const CopulaSpec& spec);
CopulaSpec copula_spec_from_json(const nlohmann::json& j, CopulaSpec base = {});

nlohmann::json to_json(const GridConfig& grid);
GridConfig grid_config_from_json(const nlohmann::json& j, GridConfig base = {});

nlohmann::json to_json(const MarginalSpec& spec);
MarginalSpec marginal_spec_from_json(const nlohmann::json& j, MarginalSpec base = {});

nlohmann::json sites_to_json(const std::vector<Site>& sites);
std::vector<Site> sites_from_json(const nlohmann::json& j);

/// Finite doubles as numbers, NaN and infinities as null.
nlohmann::json number_or_null(double v);

}  // namespace scalemix
